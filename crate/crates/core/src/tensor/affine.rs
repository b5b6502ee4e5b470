//! Affine layer y = Wx + b with hand-derived backward. The decoder uses the
//! bias-free variant (b absent).

use super::{matvec, matvec_t_add, outer_add, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    /// out x in weight matrix.
    pub w: Tensor,
    /// Optional bias of length out.
    pub b: Option<Tensor>,
}

impl AffineParams {
    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn zeros_like(&self) -> AffineParams {
        AffineParams {
            w: self.w.zeros_like(),
            b: self.b.as_ref().map(Tensor::zeros_like),
        }
    }
}

pub fn affine_forward(p: &AffineParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.in_dim() {
        return Err(Error::DimMismatch {
            context: "affine input",
            expected: p.in_dim(),
            got: x.len(),
        });
    }
    let mut y = vec![0.0; p.out_dim()];
    matvec(&p.w, x, &mut y);
    if let Some(b) = &p.b {
        for (yi, bi) in y.iter_mut().zip(b.data()) {
            *yi += bi;
        }
    }
    Ok(y)
}

/// Accumulates dW (and db when present) into `grads` and returns dx.
pub fn affine_backward(p: &AffineParams, grads: &mut AffineParams, x: &[f64], dy: &[f64]) -> Vec<f64> {
    outer_add(&mut grads.w, dy, x);
    if let Some(db) = &mut grads.b {
        for (bi, d) in db.data_mut().iter_mut().zip(dy) {
            *bi += d;
        }
    }
    let mut dx = vec![0.0; p.in_dim()];
    matvec_t_add(&p.w, dy, &mut dx);
    dx
}
