//! LSTM cell with hand-derived backpropagation through time. The forward
//! pass caches every gate activation; backward walks the sequence in reverse
//! and accumulates parameter gradients plus input gradients.

use super::{add_assign, matvec_add, matvec_t_add, outer_add, sigmoid_scalar, Tensor};
use crate::{Error, Result};

/// Per-gate input weights U (H x K), recurrent weights R (H x H), bias (H).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub ui: Tensor,
    pub uf: Tensor,
    pub uo: Tensor,
    pub uc: Tensor,
    pub ri: Tensor,
    pub rf: Tensor,
    pub ro: Tensor,
    pub rc: Tensor,
    pub bi: Tensor,
    pub bf: Tensor,
    pub bo: Tensor,
    pub bc: Tensor,
}

impl LstmParams {
    pub fn hidden_dim(&self) -> usize {
        self.ui.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.ui.cols()
    }

    pub fn zeros(h: usize, k: usize) -> LstmParams {
        LstmParams {
            ui: Tensor::zeros(&[h, k]),
            uf: Tensor::zeros(&[h, k]),
            uo: Tensor::zeros(&[h, k]),
            uc: Tensor::zeros(&[h, k]),
            ri: Tensor::zeros(&[h, h]),
            rf: Tensor::zeros(&[h, h]),
            ro: Tensor::zeros(&[h, h]),
            rc: Tensor::zeros(&[h, h]),
            bi: Tensor::zeros(&[h]),
            bf: Tensor::zeros(&[h]),
            bo: Tensor::zeros(&[h]),
            bc: Tensor::zeros(&[h]),
        }
    }

    pub fn zeros_like(&self) -> LstmParams {
        LstmParams::zeros(self.hidden_dim(), self.input_dim())
    }
}

/// Everything backward needs from one forward step.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: Vec<StepCache>,
    h: usize,
    k: usize,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn gate_preact(u: &Tensor, r: &Tensor, b: &Tensor, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
    let mut a = b.data().to_vec();
    matvec_add(u, x, &mut a);
    matvec_add(r, h_prev, &mut a);
    a
}

fn step_full(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let i: Vec<f64> = gate_preact(&p.ui, &p.ri, &p.bi, x, h_prev)
        .into_iter()
        .map(sigmoid_scalar)
        .collect();
    let f: Vec<f64> = gate_preact(&p.uf, &p.rf, &p.bf, x, h_prev)
        .into_iter()
        .map(sigmoid_scalar)
        .collect();
    let o: Vec<f64> = gate_preact(&p.uo, &p.ro, &p.bo, x, h_prev)
        .into_iter()
        .map(sigmoid_scalar)
        .collect();
    let g: Vec<f64> = gate_preact(&p.uc, &p.rc, &p.bc, x, h_prev)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let c: Vec<f64> = (0..p.hidden_dim())
        .map(|j| f[j] * c_prev[j] + i[j] * g[j])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        o,
        g,
        c,
        tanh_c,
    }
}

fn check_dims(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<()> {
    if x.len() != p.input_dim() {
        return Err(Error::DimMismatch {
            context: "lstm input",
            expected: p.input_dim(),
            got: x.len(),
        });
    }
    if h_prev.len() != p.hidden_dim() || c_prev.len() != p.hidden_dim() {
        return Err(Error::DimMismatch {
            context: "lstm state",
            expected: p.hidden_dim(),
            got: h_prev.len(),
        });
    }
    Ok(())
}

/// One cell application; returns (h, c).
pub fn lstm_step(
    p: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(p, x, h_prev, c_prev)?;
    let s = step_full(p, x, h_prev, c_prev);
    let h: Vec<f64> = s.o.iter().zip(&s.tanh_c).map(|(o, t)| o * t).collect();
    Ok((h, s.c))
}

/// Runs the cell over a sequence starting from zero state; returns hidden
/// states for every step plus the cache backward needs.
pub fn lstm_forward(p: &LstmParams, inputs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, LstmCache)> {
    let h_dim = p.hidden_dim();
    let mut h = vec![0.0; h_dim];
    let mut c = vec![0.0; h_dim];
    let mut hs = Vec::with_capacity(inputs.len());
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        check_dims(p, x, &h, &c)?;
        let s = step_full(p, x, &h, &c);
        h = s.o.iter().zip(&s.tanh_c).map(|(o, t)| o * t).collect();
        c = s.c.clone();
        hs.push(h.clone());
        steps.push(s);
    }
    Ok((
        hs,
        LstmCache {
            steps,
            h: h_dim,
            k: p.input_dim(),
        },
    ))
}

/// Backward through time. `dh` carries dLoss/dh per step from layers above;
/// returns parameter gradients plus dLoss/dx per step.
pub fn lstm_backward(
    p: &LstmParams,
    cache: &LstmCache,
    dh: &[Vec<f64>],
) -> (LstmParams, Vec<Vec<f64>>) {
    assert_eq!(dh.len(), cache.steps.len());
    let hd = cache.h;
    let mut grads = LstmParams::zeros(hd, cache.k);
    let mut dxs = vec![vec![0.0; cache.k]; cache.steps.len()];
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    for (t, s) in cache.steps.iter().enumerate().rev() {
        let mut dh_t = dh[t].clone();
        add_assign(&mut dh_t, &dh_next);
        // h = o * tanh(c)
        let da_o: Vec<f64> = (0..hd)
            .map(|j| dh_t[j] * s.tanh_c[j] * s.o[j] * (1.0 - s.o[j]))
            .collect();
        let mut dc: Vec<f64> = (0..hd)
            .map(|j| dh_t[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]))
            .collect();
        add_assign(&mut dc, &dc_next);
        // c = f * c_prev + i * g
        let da_i: Vec<f64> = (0..hd)
            .map(|j| dc[j] * s.g[j] * s.i[j] * (1.0 - s.i[j]))
            .collect();
        let da_f: Vec<f64> = (0..hd)
            .map(|j| dc[j] * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]))
            .collect();
        let da_g: Vec<f64> = (0..hd)
            .map(|j| dc[j] * s.i[j] * (1.0 - s.g[j] * s.g[j]))
            .collect();
        dc_next = (0..hd).map(|j| dc[j] * s.f[j]).collect();

        outer_add(&mut grads.ui, &da_i, &s.x);
        outer_add(&mut grads.uf, &da_f, &s.x);
        outer_add(&mut grads.uo, &da_o, &s.x);
        outer_add(&mut grads.uc, &da_g, &s.x);
        outer_add(&mut grads.ri, &da_i, &s.h_prev);
        outer_add(&mut grads.rf, &da_f, &s.h_prev);
        outer_add(&mut grads.ro, &da_o, &s.h_prev);
        outer_add(&mut grads.rc, &da_g, &s.h_prev);
        add_assign(grads.bi.data_mut(), &da_i);
        add_assign(grads.bf.data_mut(), &da_f);
        add_assign(grads.bo.data_mut(), &da_o);
        add_assign(grads.bc.data_mut(), &da_g);

        let dx = &mut dxs[t];
        matvec_t_add(&p.ui, &da_i, dx);
        matvec_t_add(&p.uf, &da_f, dx);
        matvec_t_add(&p.uo, &da_o, dx);
        matvec_t_add(&p.uc, &da_g, dx);

        dh_next = vec![0.0; hd];
        matvec_t_add(&p.ri, &da_i, &mut dh_next);
        matvec_t_add(&p.rf, &da_f, &mut dh_next);
        matvec_t_add(&p.ro, &da_o, &mut dh_next);
        matvec_t_add(&p.rc, &da_g, &mut dh_next);
    }
    (grads, dxs)
}
