//! `cliniseq topics`: top-weighted words per topic, Table-style text.

use std::path::PathBuf;

use clap::Args;
use cliniseq_core::checkpoint::Checkpoint;
use cliniseq_core::corpus::read_vocab_tsv;
use cliniseq_core::eval::{top_words, topic_report_text, TopicOrientation};
use cliniseq_core::lda::LdaModel;
use cliniseq_core::models::JointModelParams;
use cliniseq_core::tensor::Tensor;
use cliniseq_core::{Error, Result};

use crate::config::{parse_value, unknown_key, KvFile};
use crate::dataset::LdaAttachment;

pub const DEFAULT_TOP_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicSource {
    Encoder,
    Decoder,
    Lda,
}

impl TopicSource {
    pub fn parse(s: &str) -> Result<TopicSource> {
        match s {
            "encoder" => Ok(TopicSource::Encoder),
            "decoder" => Ok(TopicSource::Decoder),
            "lda" => Ok(TopicSource::Lda),
            other => Err(Error::InvalidInput(format!(
                "unknown source {other:?} (expected encoder, decoder, or lda)"
            ))),
        }
    }
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    /// Model checkpoint (model.clnt)
    #[arg(long)]
    pub model: PathBuf,
    /// vocab.tsv path, or a corpus directory containing one
    #[arg(long)]
    pub vocab: PathBuf,
    /// encoder | decoder | lda
    #[arg(long)]
    pub source: Option<String>,
    /// Words listed per topic
    #[arg(long)]
    pub n: Option<usize>,
    /// Output text file
    #[arg(long, default_value = "topics.txt")]
    pub out: PathBuf,
    /// key=value settings file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn resolve(args: &TopicsArgs) -> Result<(TopicSource, usize)> {
    let kv = KvFile::load_optional(args.config.as_deref())?;
    let mut source: Option<String> = None;
    let mut n = DEFAULT_TOP_N;
    for (key, value) in &kv.pairs {
        match key.as_str() {
            "source" => source = Some(value.clone()),
            "n" => n = parse_value(key, value)?,
            _ => return Err(unknown_key("topics", key)),
        }
    }
    if let Some(v) = &args.source {
        source = Some(v.clone());
    }
    if let Some(v) = args.n {
        n = v;
    }
    let source = TopicSource::parse(
        source
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("missing required setting: source".into()))?,
    )?;
    Ok((source, n))
}

/// The weight matrix a topic source reads from, with its orientation.
fn weight_matrix(cp: &Checkpoint, source: TopicSource) -> Result<(Tensor, TopicOrientation)> {
    match source {
        TopicSource::Encoder => {
            let params = JointModelParams::from_checkpoint(cp)?;
            let enc = params.encoder.ok_or_else(|| {
                Error::Incompatible(format!("model {} has no encoder", params.kind.name()))
            })?;
            Ok((enc.w, TopicOrientation::TopicsAsRows))
        }
        TopicSource::Decoder => {
            let params = JointModelParams::from_checkpoint(cp)?;
            let dec = params.decoder.ok_or_else(|| {
                Error::Incompatible(format!("model {} has no decoder", params.kind.name()))
            })?;
            Ok((dec.w, TopicOrientation::TopicsAsColumns))
        }
        TopicSource::Lda => {
            // Standalone topic-model checkpoint, or one embedded in a
            // classifier checkpoint.
            let model = if cp.tensor("phi").is_some() {
                LdaModel::from_checkpoint(cp)?
            } else {
                LdaAttachment::extract(cp)?.model
            };
            let data: Vec<f64> = model.phi.iter().flatten().copied().collect();
            Ok((
                Tensor::from_vec(&[model.k, model.v], data)?,
                TopicOrientation::TopicsAsRows,
            ))
        }
    }
}

pub fn run(args: &TopicsArgs) -> Result<()> {
    let (source, n) = resolve(args)?;
    let cp = Checkpoint::load(&args.model)?;
    let vocab_path = if args.vocab.is_dir() {
        args.vocab.join("vocab.tsv")
    } else {
        args.vocab.clone()
    };
    let vocab = read_vocab_tsv(&vocab_path)?;
    let (matrix, orientation) = weight_matrix(&cp, source)?;
    let k = match orientation {
        TopicOrientation::TopicsAsRows => matrix.rows(),
        TopicOrientation::TopicsAsColumns => matrix.cols(),
    };
    let mut topics = Vec::with_capacity(k);
    for topic in 0..k {
        topics.push(top_words(&matrix, orientation, topic, n, vocab.words())?);
    }
    let text = topic_report_text(&topics);
    std::fs::write(&args.out, &text)?;
    print!("{text}");
    Ok(())
}
