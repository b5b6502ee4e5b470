//! Per-time-point linear SVM over averaged topic features.
//!
//! The solver is primal subgradient descent on the weighted hinge
//! objective (1/2)||w||^2 + C * sum_i s_i * max(0, 1 - y_i (w.x_i + b)),
//! where s_i is pos_weight for positive examples and 1 for negatives.
//! Examples are visited in a freshly shuffled order each epoch with step
//! 1/(epoch * i), and the returned model is the average of the iterates
//! produced during the final epoch. Decision values feed rank-based AUC,
//! so no calibration is attempted.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::eval::{auc, AucPoint};
use crate::lda::average_theta_upto;
use crate::tensor::{derive_seed, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub pos_weight: f64,
}

/// Regularization grid: 2^-5, 2^-3, ..., 2^15.
pub const C_GRID: [f64; 11] = [
    0.03125, 0.125, 0.5, 2.0, 8.0, 32.0, 128.0, 512.0, 2048.0, 8192.0, 32768.0,
];

/// False-negative cost grid; the negative class always weighs 1.
pub const POS_WEIGHT_GRID: [f64; 5] = [1.0, 3.0, 5.0, 7.0, 9.0];

pub const DEFAULT_SVM_EPOCHS: usize = 30;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weighted hinge objective evaluated at (w, b).
pub fn svm_objective(
    w: &[f64],
    b: f64,
    features: &[Vec<f64>],
    labels: &[bool],
    c: f64,
    pos_weight: f64,
) -> f64 {
    let reg: f64 = 0.5 * dot(w, w);
    let hinge: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &l)| {
            let y = if l { 1.0 } else { -1.0 };
            let s = if l { pos_weight } else { 1.0 };
            s * (1.0 - y * (dot(w, x) + b)).max(0.0)
        })
        .sum();
    reg + c * hinge
}

fn check_features(features: &[Vec<f64>], labels: &[bool]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::DimMismatch {
            context: "svm features/labels",
            expected: features.len(),
            got: labels.len(),
        });
    }
    if features.is_empty() {
        return Err(Error::EmptyInput("no svm training examples".into()));
    }
    let dim = features[0].len();
    if features.iter().any(|x| x.len() != dim) {
        return Err(Error::InvalidInput("ragged feature vectors".into()));
    }
    Ok(dim)
}

pub fn train_svm(
    features: &[Vec<f64>],
    labels: &[bool],
    c: f64,
    pos_weight: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmModel> {
    train_svm_observed(features, labels, c, pos_weight, epochs, seed, None)
}

/// The observer, when present, sees the iterate entering the final epoch
/// and then the running average after each update within it.
fn train_svm_observed(
    features: &[Vec<f64>],
    labels: &[bool],
    c: f64,
    pos_weight: f64,
    epochs: usize,
    seed: u64,
    mut observer: Option<&mut dyn FnMut(&[f64], f64)>,
) -> Result<SvmModel> {
    let dim = check_features(features, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::InvalidInput(
            "svm training needs both classes".into(),
        ));
    }
    if epochs == 0 {
        return Err(Error::InvalidInput("epochs must be >= 1".into()));
    }
    let n = features.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut w_avg = vec![0.0; dim];
    let mut b_avg = 0.0;
    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let last = epoch == epochs;
        if last {
            if let Some(obs) = observer.as_mut() {
                obs(&w, b);
            }
        }
        for (i, &idx) in order.iter().enumerate() {
            let eta = 1.0 / (epoch as f64 * (i + 1) as f64);
            let x = &features[idx];
            let y = if labels[idx] { 1.0 } else { -1.0 };
            let s = if labels[idx] { pos_weight } else { 1.0 };
            let margin = y * (dot(&w, x) + b);
            // Subgradient of (1/2n)||w||^2 per visit plus the hinge term.
            for (wj, xj) in w.iter_mut().zip(x) {
                let hinge_grad = if margin < 1.0 { -y * xj } else { 0.0 };
                *wj -= eta * (*wj / n as f64 + c * s * hinge_grad);
            }
            if margin < 1.0 {
                b -= eta * c * s * (-y);
            }
            if last {
                for (a, &wj) in w_avg.iter_mut().zip(&w) {
                    *a += wj;
                }
                b_avg += b;
                if let Some(obs) = observer.as_mut() {
                    let count = (i + 1) as f64;
                    let prefix: Vec<f64> = w_avg.iter().map(|a| a / count).collect();
                    obs(&prefix, b_avg / count);
                }
            }
        }
    }
    for a in w_avg.iter_mut() {
        *a /= n as f64;
    }
    b_avg /= n as f64;
    if !b_avg.is_finite() || w_avg.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("svm parameters diverged".into()));
    }
    Ok(SvmModel {
        w: w_avg,
        b: b_avg,
        c,
        pos_weight,
    })
}

/// Uncalibrated decision value w.x + b.
pub fn svm_score(model: &SvmModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.w.len() {
        return Err(Error::DimMismatch {
            context: "svm_score",
            expected: model.w.len(),
            got: x.len(),
        });
    }
    Ok(dot(&model.w, x) + model.b)
}

/// Exhaustive 11x5 grid, maximizing validation AUC; ties prefer smaller C,
/// then smaller pos_weight. An undefined validation AUC counts as 0.5.
pub fn grid_search_svm(
    train_x: &[Vec<f64>],
    train_y: &[bool],
    val_x: &[Vec<f64>],
    val_y: &[bool],
    epochs: usize,
    seed: u64,
) -> Result<SvmModel> {
    if val_x.is_empty() {
        return Err(Error::EmptyInput("empty validation set for svm grid".into()));
    }
    let mut best: Option<(f64, SvmModel)> = None;
    for &c in &C_GRID {
        for &pw in &POS_WEIGHT_GRID {
            let model = train_svm(train_x, train_y, c, pw, epochs, seed)?;
            let scores: Vec<f64> = val_x
                .iter()
                .map(|x| svm_score(&model, x))
                .collect::<Result<_>>()?;
            let score = auc(&scores, val_y).unwrap_or(0.5);
            if best.as_ref().map_or(true, |(b, _)| score > *b) {
                best = Some((score, model));
            }
        }
    }
    Ok(best.unwrap().1)
}

/// Trains one classifier per time point 1..=horizon. At time point t the
/// training and validation sets hold only patients whose stay reaches t,
/// with features averaged over their non-empty time points 1..=t. Time
/// points where training lacks a class or validation is empty yield None.
pub fn train_svm_baseline(
    train_thetas: &[Vec<Vec<f64>>],
    train_labels: &[bool],
    val_thetas: &[Vec<Vec<f64>>],
    val_labels: &[bool],
    horizon: usize,
    epochs: usize,
    seed: u64,
) -> Result<Vec<Option<SvmModel>>> {
    if train_thetas.len() != train_labels.len() || val_thetas.len() != val_labels.len() {
        return Err(Error::DimMismatch {
            context: "svm baseline labels",
            expected: train_thetas.len(),
            got: train_labels.len(),
        });
    }
    let mut models = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let gather = |thetas: &[Vec<Vec<f64>>], labels: &[bool]| -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (seq, &label) in thetas.iter().zip(labels) {
                if seq.len() >= t {
                    xs.push(average_theta_upto(seq, t)?);
                    ys.push(label);
                }
            }
            Ok((xs, ys))
        };
        let (train_x, train_y) = gather(train_thetas, train_labels)?;
        let (val_x, val_y) = gather(val_thetas, val_labels)?;
        let n_pos = train_y.iter().filter(|&&l| l).count();
        if train_x.is_empty() || n_pos == 0 || n_pos == train_y.len() || val_x.is_empty() {
            models.push(None);
            continue;
        }
        let t_seed = derive_seed(seed, &format!("svm.t{t}"));
        models.push(Some(grid_search_svm(
            &train_x, &train_y, &val_x, &val_y, epochs, t_seed,
        )?));
    }
    Ok(models)
}

/// Per-time-point AUC of a trained baseline on held-out patients.
pub fn eval_svm_per_time_point(
    models: &[Option<SvmModel>],
    thetas: &[Vec<Vec<f64>>],
    labels: &[bool],
) -> Result<Vec<AucPoint>> {
    let mut report = Vec::with_capacity(models.len());
    for (idx, model) in models.iter().enumerate() {
        let t = idx + 1;
        let mut scores = Vec::new();
        let mut l = Vec::new();
        if let Some(m) = model {
            for (seq, &label) in thetas.iter().zip(labels) {
                if seq.len() >= t {
                    scores.push(svm_score(m, &average_theta_upto(seq, t)?)?);
                    l.push(label);
                }
            }
        }
        let n_pos = l.iter().filter(|&&x| x).count();
        let n_neg = l.len() - n_pos;
        let value = if n_pos >= 1 && n_neg >= 1 {
            Some(auc(&scores, &l)?)
        } else {
            None
        };
        report.push(AucPoint {
            t,
            n_pos,
            n_neg,
            auc: value,
        });
    }
    Ok(report)
}

/// Persists per-time-point models: tensor svm.t<t>.w plus scalar metadata
/// svm.t<t>.{b,c,pos_weight}; untrained time points are simply absent.
pub fn svm_models_to_checkpoint(models: &[Option<SvmModel>]) -> Checkpoint {
    let mut cp = Checkpoint::new();
    cp.set_meta("horizon", models.len());
    for (idx, model) in models.iter().enumerate() {
        let t = idx + 1;
        if let Some(m) = model {
            cp.add_tensor(
                &format!("svm.t{t}.w"),
                Tensor::from_vec(&[m.w.len()], m.w.clone()).unwrap(),
            );
            cp.set_meta(&format!("svm.t{t}.b"), m.b);
            cp.set_meta(&format!("svm.t{t}.c"), m.c);
            cp.set_meta(&format!("svm.t{t}.pos_weight"), m.pos_weight);
        }
    }
    cp
}

pub fn svm_models_from_checkpoint(cp: &Checkpoint) -> Result<Vec<Option<SvmModel>>> {
    let horizon: usize = cp.meta_parsed("horizon")?;
    let mut models = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let name = format!("svm.t{t}.w");
        match cp.tensor(&name) {
            None => models.push(None),
            Some(w) => {
                if w.dims().len() != 1 {
                    return Err(Error::Incompatible(format!("{name} must be rank 1")));
                }
                models.push(Some(SvmModel {
                    w: w.data().to_vec(),
                    b: cp.meta_parsed(&format!("svm.t{t}.b"))?,
                    c: cp.meta_parsed(&format!("svm.t{t}.c"))?,
                    pos_weight: cp.meta_parsed(&format!("svm.t{t}.pos_weight"))?,
                }));
            }
        }
    }
    Ok(models)
}
