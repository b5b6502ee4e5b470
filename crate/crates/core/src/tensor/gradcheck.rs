//! Central-difference gradient checking. Used by the test suites for every
//! layer and for the full joint models.

/// Compares `analytic` against central differences of `f` at `point`.
/// Returns the maximum relative error |a - n| / max(|a|, |n|, 1e-6).
pub fn grad_check<F>(mut f: F, point: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(point.len(), analytic.len());
    let mut x = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let fp = f(&x);
        x[i] = orig - h;
        let fm = f(&x);
        x[i] = orig;
        let numeric = (fp - fm) / (2.0 * h);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        if err > worst {
            worst = err;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let coef = [2.0, -3.0, 0.5];
        let f = |v: &[f64]| v.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let err = grad_check(f, &[1.0, 2.0, 3.0], &coef, 1e-4);
        assert!(err < 1e-10, "relative error {err}");
    }

    #[test]
    fn quadratic_function_within_tolerance() {
        let f = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        let point = [0.3, -1.2];
        let analytic = [0.6, -2.4];
        let err = grad_check(f, &point, &analytic, 1e-4);
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let f = |v: &[f64]| v[0] * v[0];
        let err = grad_check(f, &[1.0], &[3.0], 1e-4);
        assert!(err > 0.3);
    }
}
