//! Loss terms: weighted binary cross-entropy with a false-negative cost
//! multiplier, categorical cross-entropy for bag-of-words reconstruction,
//! and L1 with its subgradient.

use crate::{Error, Result};

/// Binary probabilities are clamped into [PROB_EPS, 1 - PROB_EPS] before the
/// logs so saturated outputs cannot produce infinite loss.
pub const PROB_EPS: f64 = 1e-7;

/// Reconstruction probabilities are floored here before the log.
pub const RECON_FLOOR: f64 = 1e-12;

/// H = -cfn * q * ln(p) - (1 - q) * ln(1 - p) with p clamped.
/// Returns (value, dH/dp); the gradient is 0 where the clamp is active.
pub fn weighted_ce(p: f64, q: bool, cfn: f64) -> (f64, f64) {
    let clamped = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let value = if q {
        -cfn * clamped.ln()
    } else {
        -(1.0 - clamped).ln()
    };
    let grad = if p < PROB_EPS || p > 1.0 - PROB_EPS {
        0.0
    } else if q {
        -cfn / clamped
    } else {
        1.0 / (1.0 - clamped)
    };
    (value, grad)
}

/// -sum_w target_w * ln(max(pred_w, floor)). A zero target vector means a
/// masked time point and contributes nothing. Returns (value, dL/dpred).
pub fn categorical_ce(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::DimMismatch {
            context: "categorical cross-entropy",
            expected: target.len(),
            got: pred.len(),
        });
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for ((&p, &t), g) in pred.iter().zip(target).zip(&mut grad) {
        if t == 0.0 {
            continue;
        }
        if p > RECON_FLOOR {
            value -= t * p.ln();
            *g = -t / p;
        } else {
            value -= t * RECON_FLOOR.ln();
            // clamped region: value locally constant in pred
        }
    }
    Ok((value, grad))
}

/// Sparse-target variant; the gradient is returned on the support only.
pub fn categorical_ce_sparse(pred: &[f64], target: &[(u32, f64)]) -> (f64, Vec<(u32, f64)>) {
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(target.len());
    for &(w, t) in target {
        let p = pred[w as usize];
        if p > RECON_FLOOR {
            value -= t * p.ln();
            grad.push((w, -t / p));
        } else {
            value -= t * RECON_FLOOR.ln();
        }
    }
    (value, grad)
}

/// (sum |x_i|, sign(x_i)) with sign(0) = 0.
pub fn l1_value_and_subgradient(x: &[f64]) -> (f64, Vec<f64>) {
    let value = x.iter().map(|v| v.abs()).sum();
    let sub = x
        .iter()
        .map(|&v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    (value, sub)
}
