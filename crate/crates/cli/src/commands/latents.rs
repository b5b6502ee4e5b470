//! `cliniseq latents`: per-time-point latent vectors as TSV rows
//! patient_id<TAB>t<TAB>label<TAB>K reals. Encoder models export the
//! encoder output; topic-feature models export the fold-in mixtures.
//! Empty time points have no latent and emit no row.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use cliniseq_core::checkpoint::Checkpoint;
use cliniseq_core::corpus::{CorpusEntry, Task};
use cliniseq_core::lda::LdaModel;
use cliniseq_core::models::{forward, JointModelParams, Sample};
use cliniseq_core::{Error, Result};

use crate::config::{parse_value, unknown_key, KvFile};
use crate::dataset::{load_corpus_dir, select, LdaAttachment, SplitName};

#[derive(Debug, Args)]
pub struct LatentsArgs {
    /// Model checkpoint (model.clnt)
    #[arg(long)]
    pub model: PathBuf,
    /// Preprocessed corpus directory
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output TSV path
    #[arg(long, default_value = "latents.tsv")]
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
    /// Fold-in burn-in for a standalone topic-model checkpoint
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Fold-in samples for a standalone topic-model checkpoint
    #[arg(long)]
    pub samples: Option<usize>,
    /// Fold-in seed for a standalone topic-model checkpoint
    #[arg(long)]
    pub seed: Option<u64>,
}

struct Resolved {
    split: SplitName,
    task: Option<Task>,
    burn_in: usize,
    samples: usize,
    seed: u64,
}

fn resolve(args: &LatentsArgs) -> Result<Resolved> {
    let kv = KvFile::load_optional(args.config.as_deref())?;
    let mut split: Option<String> = None;
    let mut task: Option<String> = None;
    let mut r = Resolved {
        split: SplitName::Test,
        task: None,
        burn_in: super::train::DEFAULT_INFER_BURN_IN,
        samples: super::train::DEFAULT_INFER_SAMPLES,
        seed: 0,
    };
    for (key, value) in &kv.pairs {
        match key.as_str() {
            "split" => split = Some(value.clone()),
            "task" => task = Some(value.clone()),
            "burn_in" => r.burn_in = parse_value(key, value)?,
            "samples" => r.samples = parse_value(key, value)?,
            "seed" => r.seed = parse_value(key, value)?,
            _ => return Err(unknown_key("latents", key)),
        }
    }
    if let Some(v) = &args.split {
        split = Some(v.clone());
    }
    if let Some(v) = &args.task {
        task = Some(v.clone());
    }
    if let Some(v) = args.burn_in {
        r.burn_in = v;
    }
    if let Some(v) = args.samples {
        r.samples = v;
    }
    if let Some(v) = args.seed {
        r.seed = v;
    }
    r.split = SplitName::parse(split.as_deref().unwrap_or("test"))?;
    r.task = task.as_deref().map(Task::parse).transpose()?;
    Ok(r)
}

fn push_row(out: &mut String, patient: &str, t: usize, label: bool, vector: &[f64]) {
    write!(out, "{patient}\t{t}\t{}", label as u8).unwrap();
    for x in vector {
        write!(out, "\t{x:.6}").unwrap();
    }
    out.push('\n');
}

/// Latent rows for one patient: (1-based time point, vector).
fn entry_latents(
    entry: &CorpusEntry,
    params: Option<&JointModelParams>,
    att: Option<&LdaAttachment>,
    task: Task,
    out: &mut String,
) -> Result<usize> {
    let mut rows = 0;
    let label = task.label(&entry.labels);
    match (params, att) {
        (Some(params), None) => {
            let sample = Sample::from_entry(entry, task);
            let trace = forward(params, &sample.input)?;
            for (step, &t0) in trace.nonempty.iter().enumerate() {
                push_row(out, &entry.seq.patient_id, t0 + 1, label, &trace.z[step]);
                rows += 1;
            }
        }
        (None, Some(att)) => {
            let thetas = att.thetas(&entry.seq)?;
            for (t0, counts) in entry.seq.counts.iter().enumerate() {
                if !counts.is_empty() {
                    push_row(out, &entry.seq.patient_id, t0 + 1, label, &thetas[t0]);
                    rows += 1;
                }
            }
        }
        _ => unreachable!("exactly one latent source"),
    }
    Ok(rows)
}

pub fn run(args: &LatentsArgs) -> Result<()> {
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

    // Encoder models export z; everything else exports topic mixtures.
    let (params, att): (Option<JointModelParams>, Option<LdaAttachment>) =
        match model_name.as_str() {
            "lda" => {
                let model = LdaModel::from_checkpoint(&cp)?;
                (
                    None,
                    Some(LdaAttachment {
                        model,
                        burn_in: r.burn_in,
                        samples: r.samples,
                        seed: r.seed,
                    }),
                )
            }
            "svm_lda" | "lstm_lda" => (None, Some(LdaAttachment::extract(&cp)?)),
            _ => {
                let params = JointModelParams::from_checkpoint(&cp)?;
                if params.v != corpus.vocab.size() {
                    return Err(Error::Incompatible(format!(
                        "model vocabulary {} does not match corpus vocabulary {}",
                        params.v,
                        corpus.vocab.size()
                    )));
                }
                (Some(params), None)
            }
        };
    if let Some(att) = &att {
        att.check_vocab(&corpus.vocab)?;
    }

    let mut text = String::new();
    let mut rows = 0;
    for entry in &entries {
        rows += entry_latents(entry, params.as_ref(), att.as_ref(), task, &mut text)?;
    }
    std::fs::write(&args.out, text)?;
    println!(
        "wrote {rows} rows for {} patients to {}",
        entries.len(),
        args.out.display()
    );
    Ok(())
}
