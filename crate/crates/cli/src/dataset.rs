//! Shared command plumbing: loading a preprocessed corpus directory,
//! selecting split members, task-specific downsampling, and moving topic-
//! model state in and out of classifier checkpoints.

use std::collections::BTreeMap;
use std::path::Path;

use cliniseq_core::checkpoint::Checkpoint;
use cliniseq_core::corpus::{
    downsample_negatives, read_corpus_tsv, read_splits_tsv, read_vocab_tsv, BowSequence,
    CorpusEntry, DatasetSplit, Task, Vocab,
};
use cliniseq_core::lda::{expand_counts, topic_vectors_for_sequence, LdaModel};
use cliniseq_core::models::Sample;
use cliniseq_core::tensor::Tensor;
use cliniseq_core::{Error, Result};

pub struct CorpusDir {
    pub entries: Vec<CorpusEntry>,
    pub vocab: Vocab,
    pub split: DatasetSplit,
}

/// Reads corpus.tsv, vocab.tsv, and splits.tsv from one directory.
pub fn load_corpus_dir(dir: &Path) -> Result<CorpusDir> {
    let entries = read_corpus_tsv(&dir.join("corpus.tsv"))?;
    let vocab = read_vocab_tsv(&dir.join("vocab.tsv"))?;
    let split = read_splits_tsv(&dir.join("splits.tsv"))?;
    Ok(CorpusDir {
        entries,
        vocab,
        split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub fn parse(s: &str) -> Result<SplitName> {
        match s {
            "train" => Ok(SplitName::Train),
            "validation" | "val" => Ok(SplitName::Validation),
            "test" => Ok(SplitName::Test),
            other => Err(Error::InvalidInput(format!(
                "unknown split {other:?} (expected train, validation, or test)"
            ))),
        }
    }

    pub fn ids<'a>(&self, split: &'a DatasetSplit) -> &'a [String] {
        match self {
            SplitName::Train => &split.train,
            SplitName::Validation => &split.validation,
            SplitName::Test => &split.test,
        }
    }
}

/// Resolves split ids against the corpus, in split order.
pub fn select<'a>(entries: &'a [CorpusEntry], ids: &[String]) -> Result<Vec<&'a CorpusEntry>> {
    let by_id: BTreeMap<&str, &CorpusEntry> = entries
        .iter()
        .map(|e| (e.seq.patient_id.as_str(), e))
        .collect();
    ids.iter()
        .map(|id| {
            by_id.get(id.as_str()).copied().ok_or_else(|| {
                Error::InvalidInput(format!("split references unknown patient {id:?}"))
            })
        })
        .collect()
}

pub fn bow_samples(entries: &[&CorpusEntry], task: Task) -> Vec<Sample> {
    entries.iter().map(|e| Sample::from_entry(e, task)).collect()
}

pub fn labels(entries: &[&CorpusEntry], task: Task) -> Vec<bool> {
    entries.iter().map(|e| task.label(&e.labels)).collect()
}

/// Training ids after task-specific negative downsampling. Validation and
/// test are never downsampled.
pub fn downsample_train(
    train_ids: &[String],
    entries: &[CorpusEntry],
    task: Task,
    seed: u64,
) -> Vec<String> {
    let positive: BTreeMap<&str, bool> = entries
        .iter()
        .map(|e| (e.seq.patient_id.as_str(), task.label(&e.labels)))
        .collect();
    downsample_negatives(
        train_ids,
        |id| positive.get(id).copied().unwrap_or(false),
        seed,
    )
}

/// One token list per non-empty time point, in patient then time order.
/// This is the document set a topic model trains on.
pub fn topic_docs(entries: &[&CorpusEntry]) -> Vec<Vec<u32>> {
    let mut docs = Vec::new();
    for entry in entries {
        for counts in &entry.seq.counts {
            if !counts.is_empty() {
                docs.push(expand_counts(counts));
            }
        }
    }
    docs
}

/// Topic-model state a classifier checkpoint carries along: the fitted
/// model plus the fold-in settings its features were produced with.
pub struct LdaAttachment {
    pub model: LdaModel,
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
}

impl LdaAttachment {
    pub fn embed(&self, cp: &mut Checkpoint) -> Result<()> {
        cp.set_meta("lda.alpha", self.model.alpha);
        cp.set_meta("lda.beta", self.model.beta);
        cp.set_meta("lda.burn_in", self.burn_in);
        cp.set_meta("lda.samples", self.samples);
        cp.set_meta("lda.seed", self.seed);
        let data: Vec<f64> = self.model.phi.iter().flatten().copied().collect();
        cp.add_tensor(
            "lda.phi",
            Tensor::from_vec(&[self.model.k, self.model.v], data)?,
        );
        Ok(())
    }

    pub fn extract(cp: &Checkpoint) -> Result<LdaAttachment> {
        let phi_t = cp.require_tensor("lda.phi")?;
        let dims = phi_t.dims();
        if dims.len() != 2 {
            return Err(Error::Incompatible(format!(
                "lda.phi must be rank 2, got rank {}",
                dims.len()
            )));
        }
        let (k, v) = (dims[0], dims[1]);
        let phi: Vec<Vec<f64>> = (0..k)
            .map(|row| phi_t.data()[row * v..(row + 1) * v].to_vec())
            .collect();
        Ok(LdaAttachment {
            model: LdaModel {
                k,
                v,
                alpha: cp.meta_parsed("lda.alpha")?,
                beta: cp.meta_parsed("lda.beta")?,
                topic_word_counts: Vec::new(),
                topic_totals: Vec::new(),
                phi,
            },
            burn_in: cp.meta_parsed("lda.burn_in")?,
            samples: cp.meta_parsed("lda.samples")?,
            seed: cp.meta_parsed("lda.seed")?,
        })
    }

    /// Per-time-point topic mixtures; empty time points stay zero vectors.
    pub fn thetas(&self, seq: &BowSequence) -> Result<Vec<Vec<f64>>> {
        topic_vectors_for_sequence(&self.model, seq, self.burn_in, self.samples, self.seed)
    }

    pub fn theta_sequences(&self, entries: &[&CorpusEntry]) -> Result<Vec<Vec<Vec<f64>>>> {
        entries.iter().map(|e| self.thetas(&e.seq)).collect()
    }

    pub fn theta_samples(&self, entries: &[&CorpusEntry], task: Task) -> Result<Vec<Sample>> {
        entries
            .iter()
            .map(|e| Ok(Sample::from_topic_vectors(self.thetas(&e.seq)?, task.label(&e.labels))))
            .collect()
    }

    /// Vocabulary compatibility gate for commands taking a corpus.
    pub fn check_vocab(&self, vocab: &Vocab) -> Result<()> {
        if self.model.v != vocab.size() {
            return Err(Error::Incompatible(format!(
                "topic model vocabulary {} does not match corpus vocabulary {}",
                self.model.v,
                vocab.size()
            )));
        }
        Ok(())
    }
}
