//! `cliniseq preprocess`: raw note and metadata CSVs in, corpus files out
//! (corpus.tsv, vocab.tsv, splits.tsv, stats.txt).

use std::path::{Path, PathBuf};

use clap::Args;
use cliniseq_core::corpus::{
    load_stop_words, parse_stop_words, preprocess, read_meta_csv, read_notes_csv, PreprocessConfig,
};
use cliniseq_core::{Error, Result};

use crate::config::{parse_value, unknown_key, KvFile};

/// Default stop-word list (Onix); one word per line.
const DEFAULT_STOP_WORDS: &str = include_str!("../../assets/stopwords_onix.txt");

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Notes CSV with header patient_id,chart_time,category,text
    #[arg(long)]
    pub notes: PathBuf,
    /// Metadata CSV with header
    /// patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death
    #[arg(long)]
    pub meta: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: PathBuf,
    /// key=value settings file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-patient cap on tf-idf vocabulary candidates
    #[arg(long)]
    pub vocab_cap: Option<usize>,
    /// Minimum age in years at admission
    #[arg(long)]
    pub min_age: Option<f64>,
    /// Token floor for training-set patients
    #[arg(long)]
    pub min_train_tokens: Option<u64>,
    /// Stop-word file, or "none" to disable; default: built-in Onix list
    #[arg(long)]
    pub stopwords: Option<String>,
}

fn resolve(args: &PreprocessArgs) -> Result<PreprocessConfig> {
    let kv = KvFile::load_optional(args.config.as_deref())?;
    let mut cfg = PreprocessConfig::default();
    let mut stopwords: Option<String> = None;
    for (key, value) in &kv.pairs {
        match key.as_str() {
            "seed" => cfg.seed = parse_value(key, value)?,
            "vocab_cap" => cfg.vocab_cap = parse_value(key, value)?,
            "min_age" => cfg.min_age = parse_value(key, value)?,
            "min_train_tokens" => cfg.min_train_tokens = parse_value(key, value)?,
            "stopwords" => stopwords = Some(value.clone()),
            _ => return Err(unknown_key("preprocess", key)),
        }
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.vocab_cap {
        cfg.vocab_cap = v;
    }
    if let Some(v) = args.min_age {
        cfg.min_age = v;
    }
    if let Some(v) = args.min_train_tokens {
        cfg.min_train_tokens = v;
    }
    if let Some(v) = &args.stopwords {
        stopwords = Some(v.clone());
    }
    cfg.stop_words = match stopwords.as_deref() {
        None => parse_stop_words(DEFAULT_STOP_WORDS),
        Some("none") => Default::default(),
        Some(path) => load_stop_words(Path::new(path))?,
    };
    Ok(cfg)
}

pub fn run(args: &PreprocessArgs) -> Result<()> {
    let cfg = resolve(args)?;
    let notes = read_notes_csv(&args.notes)?;
    let metas = read_meta_csv(&args.meta)?;
    if notes.is_empty() {
        return Err(Error::EmptyInput(
            "no patients: the notes file has no rows".into(),
        ));
    }
    let output = preprocess(&notes, &metas, &cfg)?;
    std::fs::create_dir_all(&args.out)?;
    output.write_to_dir(&args.out)?;
    println!(
        "read {} notes ({} dropped), {} patients ({} dropped)",
        output.n_notes_read, output.n_notes_dropped, output.n_patients_read, output.n_patients_dropped
    );
    println!(
        "kept {} patients, V={}, split {}/{}/{}; wrote {}",
        output.entries.len(),
        output.vocab.size(),
        output.split.train.len(),
        output.split.validation.len(),
        output.split.test.len(),
        args.out.display()
    );
    Ok(())
}
