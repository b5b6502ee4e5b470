//! `cliniseq train`: fit one of the model variants on a preprocessed corpus
//! and write model.clnt plus metrics.csv.
//!
//! Model names: lda (topic model only), svm_lda (per-time-point linear
//! classifiers over topic mixtures), lstm_lda (recurrent model over topic
//! mixtures), and the jointly trained lstm_e / lstm_ed / lstm_etd. The
//! training split is downsampled per task before classifier training; the
//! topic model itself always fits on the full training split.

use std::path::{Path, PathBuf};

use clap::Args;
use cliniseq_core::checkpoint::Checkpoint;
use cliniseq_core::corpus::Task;
use cliniseq_core::eval::default_horizon;
use cliniseq_core::lda::{default_alpha, fit_gibbs, LdaModel, DEFAULT_BETA};
use cliniseq_core::models::{
    cfn_grid_search, train, ModelKind, TrainConfig, TrainLogEntry, CFN_GRID,
};
use cliniseq_core::svm::{svm_models_to_checkpoint, train_svm_baseline, DEFAULT_SVM_EPOCHS};
use cliniseq_core::tensor::derive_seed;
use cliniseq_core::{Error, Result};

use crate::config::{parse_value, unknown_key, KvFile};
use crate::dataset::{
    bow_samples, downsample_train, labels, load_corpus_dir, select, topic_docs, CorpusDir,
    LdaAttachment,
};

pub const DEFAULT_TOPICS: usize = 50;
pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_LDA_ITERATIONS: usize = 300;
pub const DEFAULT_INFER_BURN_IN: usize = 25;
pub const DEFAULT_INFER_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainModel {
    Lda,
    SvmLda,
    LstmLda,
    LstmE,
    LstmEd,
    LstmEtd,
}

impl TrainModel {
    pub fn parse(s: &str) -> Result<TrainModel> {
        match s {
            "lda" => Ok(TrainModel::Lda),
            "svm_lda" => Ok(TrainModel::SvmLda),
            "lstm_lda" => Ok(TrainModel::LstmLda),
            "lstm_e" => Ok(TrainModel::LstmE),
            "lstm_ed" | "lstm_e_d" => Ok(TrainModel::LstmEd),
            "lstm_etd" | "lstm_e_t_d" => Ok(TrainModel::LstmEtd),
            other => Err(Error::InvalidInput(format!(
                "unknown model {other:?} (expected lda, svm_lda, lstm_lda, lstm_e, lstm_ed, or lstm_etd)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrainModel::Lda => "lda",
            TrainModel::SvmLda => "svm_lda",
            TrainModel::LstmLda => "lstm_lda",
            TrainModel::LstmE => "lstm_e",
            TrainModel::LstmEd => "lstm_ed",
            TrainModel::LstmEtd => "lstm_etd",
        }
    }

    /// The recurrent architecture, when this is one.
    pub fn kind(&self) -> Option<ModelKind> {
        match self {
            TrainModel::LstmLda => Some(ModelKind::LstmLda),
            TrainModel::LstmE => Some(ModelKind::LstmE),
            TrainModel::LstmEd => Some(ModelKind::LstmED),
            TrainModel::LstmEtd => Some(ModelKind::LstmETD),
            _ => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Preprocessed corpus directory
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory for model.clnt and metrics.csv
    #[arg(long)]
    pub out: PathBuf,
    /// lda | svm_lda | lstm_lda | lstm_e | lstm_ed | lstm_etd
    #[arg(long)]
    pub model: Option<String>,
    /// hospital | 30d | 1y
    #[arg(long)]
    pub task: Option<String>,
    /// key=value settings file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Topic count K
    #[arg(long)]
    pub k: Option<usize>,
    /// LSTM hidden size H
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Reconstruction weight
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Transcoder-output sparsity weight
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Decoder-weight sparsity weight
    #[arg(long)]
    pub lambda3: Option<f64>,
    /// False-negative cost, or "grid" to pick from {1,2,4,8} on validation
    #[arg(long)]
    pub cfn: Option<String>,
    #[arg(long)]
    pub val_interval: Option<usize>,
    #[arg(long)]
    pub log_interval: Option<usize>,
    /// Pre-trained topic-model checkpoint (svm_lda / lstm_lda); fitted
    /// in-run when absent
    #[arg(long)]
    pub lda: Option<PathBuf>,
    /// Gibbs sweeps for in-run topic-model fitting
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fold-in burn-in sweeps per document
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Fold-in samples averaged per document
    #[arg(long)]
    pub samples: Option<usize>,
    /// Subgradient epochs per SVM fit
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Last time point an SVM classifier is trained for
    #[arg(long)]
    pub horizon: Option<usize>,
}

struct Resolved {
    model: TrainModel,
    task: Task,
    seed: u64,
    k: usize,
    h: usize,
    cfg: TrainConfig,
    cfn_grid: bool,
    lda_path: Option<PathBuf>,
    iterations: usize,
    alpha: Option<f64>,
    beta: f64,
    burn_in: usize,
    samples: usize,
    epochs: usize,
    horizon: Option<usize>,
}

fn resolve(args: &TrainArgs) -> Result<Resolved> {
    let kv = KvFile::load_optional(args.config.as_deref())?;
    let mut model: Option<String> = None;
    let mut task: Option<String> = None;
    let mut cfn: Option<String> = None;
    let mut r = Resolved {
        model: TrainModel::Lda,
        task: Task::InHospital,
        seed: 0,
        k: DEFAULT_TOPICS,
        h: DEFAULT_HIDDEN,
        cfg: TrainConfig::default(),
        cfn_grid: false,
        lda_path: None,
        iterations: DEFAULT_LDA_ITERATIONS,
        alpha: None,
        beta: DEFAULT_BETA,
        burn_in: DEFAULT_INFER_BURN_IN,
        samples: DEFAULT_INFER_SAMPLES,
        epochs: DEFAULT_SVM_EPOCHS,
        horizon: None,
    };
    for (key, value) in &kv.pairs {
        match key.as_str() {
            "model" => model = Some(value.clone()),
            "task" => task = Some(value.clone()),
            "seed" => r.seed = parse_value(key, value)?,
            "k" => r.k = parse_value(key, value)?,
            "h" => r.h = parse_value(key, value)?,
            "lr" => r.cfg.lr = parse_value(key, value)?,
            "batch" => r.cfg.batch_size = parse_value(key, value)?,
            "steps" => r.cfg.steps = parse_value(key, value)?,
            "lambda1" => r.cfg.lambda1 = parse_value(key, value)?,
            "lambda2" => r.cfg.lambda2 = parse_value(key, value)?,
            "lambda3" => r.cfg.lambda3 = parse_value(key, value)?,
            "cfn" => cfn = Some(value.clone()),
            "val_interval" => r.cfg.val_interval = parse_value(key, value)?,
            "log_interval" => r.cfg.log_interval = parse_value(key, value)?,
            "lda" => r.lda_path = Some(PathBuf::from(value)),
            "iterations" => r.iterations = parse_value(key, value)?,
            "alpha" => r.alpha = Some(parse_value(key, value)?),
            "beta" => r.beta = parse_value(key, value)?,
            "burn_in" => r.burn_in = parse_value(key, value)?,
            "samples" => r.samples = parse_value(key, value)?,
            "epochs" => r.epochs = parse_value(key, value)?,
            "horizon" => r.horizon = Some(parse_value(key, value)?),
            _ => return Err(unknown_key("train", key)),
        }
    }
    if let Some(v) = &args.model {
        model = Some(v.clone());
    }
    if let Some(v) = &args.task {
        task = Some(v.clone());
    }
    if let Some(v) = args.seed {
        r.seed = v;
    }
    if let Some(v) = args.k {
        r.k = v;
    }
    if let Some(v) = args.h {
        r.h = v;
    }
    if let Some(v) = args.lr {
        r.cfg.lr = v;
    }
    if let Some(v) = args.batch {
        r.cfg.batch_size = v;
    }
    if let Some(v) = args.steps {
        r.cfg.steps = v;
    }
    if let Some(v) = args.lambda1 {
        r.cfg.lambda1 = v;
    }
    if let Some(v) = args.lambda2 {
        r.cfg.lambda2 = v;
    }
    if let Some(v) = args.lambda3 {
        r.cfg.lambda3 = v;
    }
    if let Some(v) = &args.cfn {
        cfn = Some(v.clone());
    }
    if let Some(v) = args.val_interval {
        r.cfg.val_interval = v;
    }
    if let Some(v) = args.log_interval {
        r.cfg.log_interval = v;
    }
    if let Some(v) = &args.lda {
        r.lda_path = Some(v.clone());
    }
    if let Some(v) = args.iterations {
        r.iterations = v;
    }
    if let Some(v) = args.alpha {
        r.alpha = Some(v);
    }
    if let Some(v) = args.beta {
        r.beta = v;
    }
    if let Some(v) = args.burn_in {
        r.burn_in = v;
    }
    if let Some(v) = args.samples {
        r.samples = v;
    }
    if let Some(v) = args.epochs {
        r.epochs = v;
    }
    if let Some(v) = args.horizon {
        r.horizon = Some(v);
    }

    r.model = TrainModel::parse(
        model
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("missing required setting: model".into()))?,
    )?;
    if let Some(t) = &task {
        r.task = Task::parse(t)?;
    }
    match cfn.as_deref() {
        None => {}
        Some("grid") => r.cfn_grid = true,
        Some(v) => r.cfg.cfn = parse_value("cfn", v)?,
    }
    r.cfg.seed = r.seed;
    r.cfg.task = r.task;
    Ok(r)
}

/// step,train_loss,val_auc rows; absent values stay empty fields.
pub fn write_metrics(path: &Path, log: &[TrainLogEntry]) -> Result<()> {
    let mut out = String::from("step,train_loss,val_auc\n");
    for e in log {
        let loss = e.train_loss.map(|x| format!("{x:.6}")).unwrap_or_default();
        let auc = e.val_auc.map(|x| format!("{x:.6}")).unwrap_or_default();
        out.push_str(&format!("{},{loss},{auc}\n", e.step));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Fits the topic model on every training-split document (no
/// task-specific downsampling: topic fitting is unsupervised).
fn fit_topic_model(r: &Resolved, corpus: &CorpusDir) -> Result<LdaModel> {
    let train_entries = select(&corpus.entries, &corpus.split.train)?;
    let docs = topic_docs(&train_entries);
    let alpha = r.alpha.unwrap_or_else(|| default_alpha(r.k));
    fit_gibbs(
        docs,
        r.k,
        corpus.vocab.size(),
        alpha,
        r.beta,
        r.iterations,
        derive_seed(r.seed, "lda.fit"),
    )
}

fn obtain_lda(r: &Resolved, corpus: &CorpusDir) -> Result<LdaAttachment> {
    let model = match &r.lda_path {
        Some(path) => LdaModel::from_checkpoint(&Checkpoint::load(path)?)?,
        None => fit_topic_model(r, corpus)?,
    };
    let att = LdaAttachment {
        model,
        burn_in: r.burn_in,
        samples: r.samples,
        seed: derive_seed(r.seed, "lda.infer"),
    };
    att.check_vocab(&corpus.vocab)?;
    Ok(att)
}

fn run_lda(r: &Resolved, corpus: &CorpusDir, out: &Path) -> Result<()> {
    let model = fit_topic_model(r, corpus)?;
    let mut cp = model.to_checkpoint();
    cp.set_meta("model", "lda");
    cp.set_meta("iterations", r.iterations);
    cp.set_meta("seed", r.seed);
    cp.save(&out.join("model.clnt"))?;
    write_metrics(&out.join("metrics.csv"), &[])?;
    println!(
        "fitted {} topics over {} words; wrote {}",
        model.k,
        model.v,
        out.join("model.clnt").display()
    );
    Ok(())
}

fn run_svm(r: &Resolved, corpus: &CorpusDir, out: &Path) -> Result<()> {
    let train_ids = downsample_train(
        &corpus.split.train,
        &corpus.entries,
        r.task,
        derive_seed(r.seed, "downsample"),
    );
    let train_entries = select(&corpus.entries, &train_ids)?;
    let val_entries = select(&corpus.entries, &corpus.split.validation)?;
    let att = obtain_lda(r, corpus)?;
    let train_thetas = att.theta_sequences(&train_entries)?;
    let val_thetas = att.theta_sequences(&val_entries)?;
    let train_labels = labels(&train_entries, r.task);
    let val_labels = labels(&val_entries, r.task);
    let horizon = r.horizon.unwrap_or_else(|| {
        let lens: Vec<usize> = train_entries.iter().map(|e| e.seq.len()).collect();
        default_horizon(&lens)
    });
    let models = train_svm_baseline(
        &train_thetas,
        &train_labels,
        &val_thetas,
        &val_labels,
        horizon,
        r.epochs,
        r.seed,
    )?;
    let mut cp = svm_models_to_checkpoint(&models);
    cp.set_meta("model", "svm_lda");
    cp.set_meta("task", r.task.name());
    cp.set_meta("epochs", r.epochs);
    cp.set_meta("seed", r.seed);
    att.embed(&mut cp)?;
    cp.save(&out.join("model.clnt"))?;
    write_metrics(&out.join("metrics.csv"), &[])?;
    let trained = models.iter().filter(|m| m.is_some()).count();
    println!(
        "trained {trained}/{horizon} per-time-point classifiers; wrote {}",
        out.join("model.clnt").display()
    );
    Ok(())
}

fn run_lstm(r: &Resolved, corpus: &CorpusDir, out: &Path) -> Result<()> {
    let kind = r.model.kind().expect("recurrent model");
    let train_ids = downsample_train(
        &corpus.split.train,
        &corpus.entries,
        r.task,
        derive_seed(r.seed, "downsample"),
    );
    let train_entries = select(&corpus.entries, &train_ids)?;
    let val_entries = select(&corpus.entries, &corpus.split.validation)?;
    let v = corpus.vocab.size();

    let (train_samples, val_samples, att) = if kind.uses_bow() {
        (
            bow_samples(&train_entries, r.task),
            bow_samples(&val_entries, r.task),
            None,
        )
    } else {
        let att = obtain_lda(r, corpus)?;
        let ts = att.theta_samples(&train_entries, r.task)?;
        let vs = att.theta_samples(&val_entries, r.task)?;
        (ts, vs, Some(att))
    };

    let mut cfg = r.cfg.clone();
    if r.cfn_grid {
        let (best, table) = cfn_grid_search(
            kind,
            r.k,
            r.h,
            v,
            &train_samples,
            &val_samples,
            &cfg,
            &CFN_GRID,
        )?;
        cfg.cfn = best;
        for (candidate, auc) in &table {
            match auc {
                Some(a) => println!("cfn {candidate}: validation auc {a:.4}"),
                None => println!("cfn {candidate}: validation auc undefined"),
            }
        }
        println!("selected cfn = {best}");
    }
    let result = train(kind, r.k, r.h, v, &train_samples, &val_samples, &cfg)?;

    let mut cp = result.params.to_checkpoint();
    cp.set_meta("model", r.model.name());
    cp.set_meta("task", r.task.name());
    cp.set_meta("lr", cfg.lr);
    cp.set_meta("batch_size", cfg.batch_size);
    cp.set_meta("lambda1", cfg.lambda1);
    cp.set_meta("lambda2", cfg.lambda2);
    cp.set_meta("lambda3", cfg.lambda3);
    cp.set_meta("cfn", cfg.cfn);
    cp.set_meta("seed", cfg.seed);
    cp.set_meta("steps", cfg.steps);
    cp.set_meta("val_interval", cfg.val_interval);
    cp.set_meta("log_interval", cfg.log_interval);
    cp.set_meta("best_step", result.best_step);
    if let Some(a) = result.best_val_auc {
        cp.set_meta("best_val_auc", a);
    }
    if let Some(att) = &att {
        att.embed(&mut cp)?;
    }
    cp.save(&out.join("model.clnt"))?;
    write_metrics(&out.join("metrics.csv"), &result.log)?;
    match result.best_val_auc {
        Some(a) => println!("best validation auc {a:.4} at step {}", result.best_step),
        None => println!("validation auc undefined; kept final parameters"),
    }
    println!("wrote {}", out.join("model.clnt").display());
    Ok(())
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let r = resolve(args)?;
    let corpus = load_corpus_dir(&args.corpus)?;
    std::fs::create_dir_all(&args.out)?;
    match r.model {
        TrainModel::Lda => run_lda(&r, &corpus, &args.out),
        TrainModel::SvmLda => run_svm(&r, &corpus, &args.out),
        _ => run_lstm(&r, &corpus, &args.out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_round_trip_and_aliases_parse() {
        for name in ["lda", "svm_lda", "lstm_lda", "lstm_e", "lstm_ed", "lstm_etd"] {
            assert_eq!(TrainModel::parse(name).unwrap().name(), name);
        }
        assert_eq!(TrainModel::parse("lstm_e_d").unwrap(), TrainModel::LstmEd);
        assert_eq!(TrainModel::parse("lstm_e_t_d").unwrap(), TrainModel::LstmEtd);
        assert!(TrainModel::parse("svm").is_err());
    }

    #[test]
    fn metrics_format_leaves_absent_fields_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics(
            &path,
            &[
                TrainLogEntry {
                    step: 1,
                    train_loss: Some(0.5),
                    val_auc: None,
                },
                TrainLogEntry {
                    step: 2,
                    train_loss: None,
                    val_auc: Some(0.75),
                },
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "step,train_loss,val_auc\n1,0.500000,\n2,,0.750000\n");
    }
}
