//! Dense f64 tensors plus the hand-derived layer math the sequence models
//! need. All arithmetic runs in 64-bit; conversion to 32-bit happens only at
//! the checkpoint boundary.

mod adam;
mod affine;
mod gradcheck;
mod init;
mod loss;
mod lstm;

pub use adam::AdamState;
pub use affine::{affine_backward, affine_forward, AffineParams};
pub use gradcheck::grad_check;
pub use init::{derive_seed, init_affine, init_lstm, uniform_fan_in};
pub use loss::{
    categorical_ce, categorical_ce_sparse, l1_value_and_subgradient, weighted_ce, PROB_EPS,
    RECON_FLOOR,
};
pub use lstm::{lstm_backward, lstm_forward, lstm_step, LstmCache, LstmParams};

use crate::{Error, Result};

/// Sparse vector as (index, value) pairs sorted by index. The bag-of-words
/// input path is the only sparse math in the crate.
pub type SparseVec = Vec<(u32, f64)>;

/// Row-major dense tensor of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Tensor {
        let n = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::DimMismatch {
                context: "tensor construction",
                expected: n,
                got: data.len(),
            });
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        self.dims[0]
    }

    /// Columns of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        self.dims[1]
    }

    pub fn at2(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dims[1] + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.dims[1];
        &self.data[r * c..(r + 1) * c]
    }

    pub fn zeros_like(&self) -> Tensor {
        Tensor::zeros(&self.dims)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| sigmoid_scalar(v)).collect()
}

pub fn sigmoid_scalar(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn tanh_vec(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.tanh()).collect()
}

/// Max-subtracted softmax; output sums to 1 for any finite input.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| (v - m).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Backward through softmax: given s = softmax(a) and dL/ds, returns dL/da.
pub fn softmax_backward(s: &[f64], ds: &[f64]) -> Vec<f64> {
    let dot: f64 = s.iter().zip(ds).map(|(a, b)| a * b).sum();
    s.iter().zip(ds).map(|(&si, &dsi)| si * (dsi - dot)).collect()
}

/// Sparse variant of `softmax_backward`: dL/ds is nonzero only at `ds`.
pub fn softmax_backward_sparse(s: &[f64], ds: &[(u32, f64)]) -> Vec<f64> {
    let dot: f64 = ds.iter().map(|&(w, d)| s[w as usize] * d).sum();
    let mut out: Vec<f64> = s.iter().map(|&si| si * -dot).collect();
    for &(w, d) in ds {
        out[w as usize] += s[w as usize] * d;
    }
    out
}

/// y = W x for a rank-2 W (rows x cols).
pub(crate) fn matvec(w: &Tensor, x: &[f64], y: &mut [f64]) {
    let cols = w.cols();
    for (yi, row) in y.iter_mut().zip(w.data.chunks_exact(cols)) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *yi = acc;
    }
}

/// y += W x.
pub(crate) fn matvec_add(w: &Tensor, x: &[f64], y: &mut [f64]) {
    let cols = w.cols();
    for (yi, row) in y.iter_mut().zip(w.data.chunks_exact(cols)) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *yi += acc;
    }
}

/// dx += W^T dy.
pub(crate) fn matvec_t_add(w: &Tensor, dy: &[f64], dx: &mut [f64]) {
    let cols = w.cols();
    for (row, &d) in w.data.chunks_exact(cols).zip(dy) {
        for (xi, a) in dx.iter_mut().zip(row) {
            *xi += a * d;
        }
    }
}

/// dw += dy x^T (outer product accumulate).
pub(crate) fn outer_add(dw: &mut Tensor, dy: &[f64], x: &[f64]) {
    let cols = dw.cols();
    for (row, &d) in dw.data.chunks_exact_mut(cols).zip(dy) {
        for (wi, b) in row.iter_mut().zip(x) {
            *wi += d * b;
        }
    }
}

/// y = W x for sparse x given as sorted (index, value) pairs.
pub(crate) fn matvec_sparse(w: &Tensor, x: &[(u32, f64)], y: &mut [f64]) {
    let cols = w.cols();
    for (yi, row) in y.iter_mut().zip(w.data.chunks_exact(cols)) {
        let mut acc = 0.0;
        for &(j, v) in x {
            acc += row[j as usize] * v;
        }
        *yi = acc;
    }
}

/// dw += dy x^T for sparse x; touches only the support columns.
pub(crate) fn outer_add_sparse(dw: &mut Tensor, dy: &[f64], x: &[(u32, f64)]) {
    let cols = dw.cols();
    for (row, &d) in dw.data.chunks_exact_mut(cols).zip(dy) {
        for &(j, v) in x {
            row[j as usize] += d * v;
        }
    }
}

pub(crate) fn add_assign(acc: &mut [f64], other: &[f64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_from_vec_checks_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(&[-1.0, 2.0]), vec![0.0, 2.0]);
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(sigmoid(&[0.0]), vec![0.5]);
    }

    #[test]
    fn softmax_of_equal_inputs_is_uniform() {
        let s = softmax(&[0.0, 0.0]);
        assert!((s[0] - 0.5).abs() < 1e-15 && (s[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn softmax_handles_large_inputs() {
        let s = softmax(&[1000.0, 1000.0, 999.0]);
        assert!(s.iter().all(|v| v.is_finite()));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matvec_matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let (r, c) = (3, 5);
            let w_data: Vec<f64> = (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = Tensor::from_vec(&[r, c], w_data.clone()).unwrap();
            let mut y = vec![0.0; r];
            matvec(&w, &x, &mut y);
            // independent naive computation
            for i in 0..r {
                let mut acc = 0.0;
                for j in 0..c {
                    acc += w_data[i * c + j] * x[j];
                }
                assert!((y[i] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sparse_matvec_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (r, c) = (4, 9);
        let w = Tensor::from_vec(
            &[r, c],
            (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let sparse: SparseVec = vec![(1, 0.5), (4, -2.0), (8, 1.5)];
        let mut dense = vec![0.0; c];
        for &(j, v) in &sparse {
            dense[j as usize] = v;
        }
        let mut ys = vec![0.0; r];
        let mut yd = vec![0.0; r];
        matvec_sparse(&w, &sparse, &mut ys);
        matvec(&w, &dense, &mut yd);
        for (a, b) in ys.iter().zip(&yd) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            xs in proptest::collection::vec(-50.0f64..50.0, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let s = softmax(&xs);
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let shifted: Vec<f64> = xs.iter().map(|v| v + shift).collect();
            let s2 = softmax(&shifted);
            for (a, b) in s.iter().zip(&s2) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
