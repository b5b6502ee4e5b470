//! Minibatch training with Adam and validation-based model selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{backward, forward, loss_from_trace, JointModelParams, ModelKind, Sample, TrainConfig};
use crate::eval::{auc, eval_per_time_point, mean_auc};
use crate::tensor::{add_assign, derive_seed, AdamState};
use crate::{Error, Result};

/// Candidate false-negative cost multipliers for the tuning sweep.
pub const CFN_GRID: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogEntry {
    pub step: usize,
    /// Mean batch loss; present on logging steps.
    pub train_loss: Option<f64>,
    /// Final-time-point validation AUC; present on validation steps where
    /// it is defined.
    pub val_auc: Option<f64>,
}

/// Trained parameters plus the selection trail.
#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Parameters from the best validation step, or the final step when
    /// validation never produced a defined AUC.
    pub params: JointModelParams,
    pub log: Vec<TrainLogEntry>,
    pub best_val_auc: Option<f64>,
    /// Step the returned parameters come from (0 when `steps` is 0).
    pub best_step: usize,
}

/// Prediction at each patient's last time point, paired with labels.
pub fn final_scores(params: &JointModelParams, samples: &[Sample]) -> Result<(Vec<f64>, Vec<bool>)> {
    let mut scores = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for sample in samples {
        let trace = forward(params, &sample.input)?;
        let last = *trace.y_hat.last().ok_or_else(|| {
            Error::EmptyInput("cannot score a zero-length sequence".to_string())
        })?;
        scores.push(last);
        labels.push(sample.label);
    }
    Ok((scores, labels))
}

/// Full per-time-point prediction vector for each sample, in order.
pub fn sequence_scores(params: &JointModelParams, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    samples
        .iter()
        .map(|s| forward(params, &s.input).map(|tr| tr.y_hat))
        .collect()
}

/// Trains one model. Batches are drawn uniformly with replacement from a
/// seeded stream; gradients from the batch are averaged in index order so
/// reruns with the same config are bit-identical. Returns the parameters
/// of the best validation step when validation AUC was ever defined,
/// otherwise the final parameters.
pub fn train(
    kind: ModelKind,
    k: usize,
    h: usize,
    v: usize,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set is empty".to_string()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be positive".to_string()));
    }
    if cfg.val_interval == 0 || cfg.log_interval == 0 {
        return Err(Error::InvalidInput(
            "val_interval and log_interval must be positive".to_string(),
        ));
    }
    let mut params = JointModelParams::init(kind, k, h, v, cfg.seed)?;
    let mut log = Vec::new();
    if cfg.steps == 0 {
        return Ok(TrainResult {
            params,
            log,
            best_val_auc: None,
            best_step: 0,
        });
    }

    let n_params = params.n_params();
    let mut adam = AdamState::new(n_params);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "batch"));
    let mut best: Option<(f64, JointModelParams, usize)> = None;

    for step in 1..=cfg.steps {
        let indices: Vec<usize> = (0..cfg.batch_size)
            .map(|_| batch_rng.gen_range(0..train_set.len()))
            .collect();

        let per_sample: Result<Vec<(f64, JointModelParams)>> = indices
            .par_iter()
            .map(|&i| {
                let sample = &train_set[i];
                let trace = forward(&params, &sample.input)?;
                let loss = loss_from_trace(&params, &trace, &sample.input, sample.label, cfg)?;
                let grads = backward(&params, &trace, &sample.input, sample.label, cfg)?;
                Ok((loss, grads))
            })
            .collect();
        let per_sample = per_sample?;

        let inv_batch = 1.0 / cfg.batch_size as f64;
        let mut loss_sum = 0.0;
        let mut grad_flat = vec![0.0; n_params];
        for (loss, grads) in &per_sample {
            loss_sum += loss;
            add_assign(&mut grad_flat, &grads.flatten());
        }
        for g in &mut grad_flat {
            *g *= inv_batch;
        }
        let batch_loss = loss_sum * inv_batch;
        if !batch_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "training loss became non-finite at step {step}"
            )));
        }

        let mut flat = params.flatten();
        adam.update(&mut flat, &grad_flat, cfg.lr)?;
        params.set_from_flat(&flat)?;

        let log_loss = step == 1 || step % cfg.log_interval == 0 || step == cfg.steps;
        let validate =
            !val_set.is_empty() && (step % cfg.val_interval == 0 || step == cfg.steps);
        let val_auc = if validate {
            let (scores, labels) = final_scores(&params, val_set)?;
            auc(&scores, &labels).ok()
        } else {
            None
        };
        if let Some(a) = val_auc {
            let improved = best.as_ref().map_or(true, |(b, _, _)| a > *b);
            if improved {
                best = Some((a, params.clone(), step));
            }
        }
        if log_loss || val_auc.is_some() {
            log.push(TrainLogEntry {
                step,
                train_loss: log_loss.then_some(batch_loss),
                val_auc,
            });
        }
    }

    Ok(match best {
        Some((best_auc, best_params, best_step)) => TrainResult {
            params: best_params,
            log,
            best_val_auc: Some(best_auc),
            best_step,
        },
        None => TrainResult {
            params,
            log,
            best_val_auc: None,
            best_step: cfg.steps,
        },
    })
}

/// Trains once per candidate false-negative cost and keeps the one whose
/// mean per-time-point validation AUC is highest (first candidate wins
/// ties or an all-undefined sweep). Returns the chosen value plus each
/// candidate's score.
pub fn cfn_grid_search(
    kind: ModelKind,
    k: usize,
    h: usize,
    v: usize,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
    candidates: &[f64],
) -> Result<(f64, Vec<(f64, Option<f64>)>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty cfn candidate list".to_string()));
    }
    if val_set.is_empty() {
        return Err(Error::EmptyInput(
            "cfn selection needs a validation set".to_string(),
        ));
    }
    let horizon = val_set.iter().map(|s| s.input.len()).max().unwrap_or(1);
    let val_labels: Vec<bool> = val_set.iter().map(|s| s.label).collect();
    let mut rows = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, f64)> = None;
    for &cfn in candidates {
        let candidate_cfg = TrainConfig {
            cfn,
            ..cfg.clone()
        };
        let result = train(kind, k, h, v, train_set, val_set, &candidate_cfg)?;
        let scores = sequence_scores(&result.params, val_set)?;
        let report = eval_per_time_point(&scores, &val_labels, horizon)?;
        let score = mean_auc(&report);
        rows.push((cfn, score));
        if let Some(s) = score {
            let improved = best.map_or(true, |(b, _)| s > b);
            if improved {
                best = Some((s, cfn));
            }
        }
    }
    let chosen = best.map(|(_, c)| c).unwrap_or(candidates[0]);
    Ok((chosen, rows))
}
