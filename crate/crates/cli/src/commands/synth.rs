//! `cliniseq synth`: write a seeded synthetic corpus with known topics and
//! a known outcome signal.

use std::path::PathBuf;

use clap::Args;
use cliniseq_core::synth::{gen_corpus, write_corpus_files, write_raw_csv, SynthConfig};
use cliniseq_core::Result;

use crate::config::{parse_value, unknown_key, KvFile};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: PathBuf,
    /// key=value settings file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub patients: Option<usize>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub topics: Option<usize>,
    #[arg(long)]
    pub risk_topics: Option<usize>,
    #[arg(long)]
    pub mean_seq_len: Option<f64>,
    #[arg(long)]
    pub doc_len: Option<usize>,
    #[arg(long)]
    pub empty_rate: Option<f64>,
    #[arg(long)]
    pub risk_strength: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write notes.csv and meta.csv, the raw-note view of the corpus
    #[arg(long)]
    pub raw: bool,
}

fn resolve(args: &SynthArgs) -> Result<(SynthConfig, bool)> {
    let kv = KvFile::load_optional(args.config.as_deref())?;
    let mut cfg = SynthConfig::default();
    let mut raw = false;
    for (key, value) in &kv.pairs {
        match key.as_str() {
            "patients" => cfg.n_patients = parse_value(key, value)?,
            "vocab_size" => cfg.vocab_size = parse_value(key, value)?,
            "topics" => cfg.n_topics = parse_value(key, value)?,
            "risk_topics" => cfg.n_risk_topics = parse_value(key, value)?,
            "mean_seq_len" => cfg.mean_seq_len = parse_value(key, value)?,
            "doc_len" => cfg.doc_len = parse_value(key, value)?,
            "empty_rate" => cfg.empty_rate = parse_value(key, value)?,
            "risk_strength" => cfg.risk_strength = parse_value(key, value)?,
            "seed" => cfg.seed = parse_value(key, value)?,
            "raw" => raw = parse_value(key, value)?,
            _ => return Err(unknown_key("synth", key)),
        }
    }
    if let Some(v) = args.patients {
        cfg.n_patients = v;
    }
    if let Some(v) = args.vocab_size {
        cfg.vocab_size = v;
    }
    if let Some(v) = args.topics {
        cfg.n_topics = v;
    }
    if let Some(v) = args.risk_topics {
        cfg.n_risk_topics = v;
    }
    if let Some(v) = args.mean_seq_len {
        cfg.mean_seq_len = v;
    }
    if let Some(v) = args.doc_len {
        cfg.doc_len = v;
    }
    if let Some(v) = args.empty_rate {
        cfg.empty_rate = v;
    }
    if let Some(v) = args.risk_strength {
        cfg.risk_strength = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    Ok((cfg, raw || args.raw))
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let (cfg, raw) = resolve(args)?;
    let corpus = gen_corpus(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    write_corpus_files(&corpus, &args.out)?;
    if raw {
        write_raw_csv(&corpus, &args.out)?;
    }
    let n_pos = corpus
        .entries
        .iter()
        .filter(|e| e.labels.in_hospital)
        .count();
    println!(
        "wrote {} patients ({} positive), V={}, K={} to {}",
        corpus.entries.len(),
        n_pos,
        cfg.vocab_size,
        cfg.n_topics,
        args.out.display()
    );
    Ok(())
}
