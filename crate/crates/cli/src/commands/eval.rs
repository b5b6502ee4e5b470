//! `cliniseq eval`: per-time-point AUC of a trained checkpoint on one
//! corpus split, written as auc.csv.

use std::path::PathBuf;

use clap::Args;
use cliniseq_core::checkpoint::Checkpoint;
use cliniseq_core::corpus::Task;
use cliniseq_core::eval::{auc_report_csv, default_horizon, eval_per_time_point, mean_auc};
use cliniseq_core::models::{sequence_scores, JointModelParams};
use cliniseq_core::svm::{eval_svm_per_time_point, svm_models_from_checkpoint};
use cliniseq_core::{Error, Result};

use crate::config::{parse_value, unknown_key, KvFile};
use crate::dataset::{bow_samples, labels, load_corpus_dir, select, LdaAttachment, SplitName};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model checkpoint (model.clnt)
    #[arg(long)]
    pub model: PathBuf,
    /// Preprocessed corpus directory
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output CSV path
    #[arg(long, default_value = "auc.csv")]
    pub out: PathBuf,
    /// key=value settings file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// train | validation | test
    #[arg(long)]
    pub split: Option<String>,
    /// hospital | 30d | 1y; default: the task the checkpoint was trained on
    #[arg(long)]
    pub task: Option<String>,
    /// Last time point evaluated; default: 90th-percentile sequence length
    #[arg(long)]
    pub horizon: Option<usize>,
}

struct Resolved {
    split: SplitName,
    task: Option<Task>,
    horizon: Option<usize>,
}

fn resolve(args: &EvalArgs) -> Result<Resolved> {
    let kv = KvFile::load_optional(args.config.as_deref())?;
    let mut split: Option<String> = None;
    let mut task: Option<String> = None;
    let mut horizon: Option<usize> = None;
    for (key, value) in &kv.pairs {
        match key.as_str() {
            "split" => split = Some(value.clone()),
            "task" => task = Some(value.clone()),
            "horizon" => horizon = Some(parse_value(key, value)?),
            _ => return Err(unknown_key("eval", key)),
        }
    }
    if let Some(v) = &args.split {
        split = Some(v.clone());
    }
    if let Some(v) = &args.task {
        task = Some(v.clone());
    }
    if let Some(v) = args.horizon {
        horizon = Some(v);
    }
    Ok(Resolved {
        split: SplitName::parse(split.as_deref().unwrap_or("test"))?,
        task: task.as_deref().map(Task::parse).transpose()?,
        horizon,
    })
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let r = resolve(args)?;
    let cp = Checkpoint::load(&args.model)?;
    let corpus = load_corpus_dir(&args.corpus)?;
    let model_name = cp
        .meta("model")
        .or_else(|| cp.meta("kind"))
        .ok_or_else(|| Error::Incompatible("checkpoint does not name its model".into()))?
        .to_string();
    let task = match r.task {
        Some(t) => t,
        None => match cp.meta("task") {
            Some(s) => Task::parse(s)?,
            None => Task::InHospital,
        },
    };
    let entries = select(&corpus.entries, r.split.ids(&corpus.split))?;
    if entries.is_empty() {
        return Err(Error::EmptyInput("the selected split has no patients".into()));
    }
    let label_vec = labels(&entries, task);

    let report = match model_name.as_str() {
        "lda" => {
            return Err(Error::Incompatible(
                "a topic-model checkpoint has no classifier to evaluate; train svm_lda or an lstm variant".into(),
            ))
        }
        "svm_lda" => {
            let models = svm_models_from_checkpoint(&cp)?;
            let att = LdaAttachment::extract(&cp)?;
            att.check_vocab(&corpus.vocab)?;
            let thetas = att.theta_sequences(&entries)?;
            let mut report = eval_svm_per_time_point(&models, &thetas, &label_vec)?;
            if let Some(h) = r.horizon {
                report.truncate(h);
            }
            report
        }
        _ => {
            let params = JointModelParams::from_checkpoint(&cp)?;
            let scores = if params.kind.uses_bow() {
                if params.v != corpus.vocab.size() {
                    return Err(Error::Incompatible(format!(
                        "model vocabulary {} does not match corpus vocabulary {}",
                        params.v,
                        corpus.vocab.size()
                    )));
                }
                sequence_scores(&params, &bow_samples(&entries, task))?
            } else {
                let att = LdaAttachment::extract(&cp)?;
                att.check_vocab(&corpus.vocab)?;
                if att.model.k != params.k {
                    return Err(Error::Incompatible(format!(
                        "topic model has {} topics but the classifier expects {}",
                        att.model.k, params.k
                    )));
                }
                sequence_scores(&params, &att.theta_samples(&entries, task)?)?
            };
            let horizon = r.horizon.unwrap_or_else(|| {
                let lens: Vec<usize> = entries.iter().map(|e| e.seq.len()).collect();
                default_horizon(&lens)
            });
            eval_per_time_point(&scores, &label_vec, horizon)?
        }
    };

    std::fs::write(&args.out, auc_report_csv(task.name(), &model_name, &report))?;
    if let Some(m) = mean_auc(&report) {
        println!("mean auc over {} time points: {m:.4}", report.len());
    }
    if let Some(p) = report.iter().rev().find(|p| p.auc.is_some()) {
        println!("auc at t={}: {:.4}", p.t, p.auc.unwrap());
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
