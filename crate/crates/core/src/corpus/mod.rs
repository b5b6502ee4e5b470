//! Corpus pipeline: raw notes and patient metadata in, per-time-point
//! bag-of-words sequences, vocabulary, labels, and dataset splits out.
//!
//! A patient's stay is cut into fixed 12-hour time points starting at
//! admission. All notes charted inside one time point are pooled into a
//! single sparse count vector; empty time points stay as zero vectors and
//! are preserved so sequence positions line up with wall-clock time.

mod io;
mod labels;
mod pipeline;
mod segment;
mod split;
mod text;
mod vocab;

pub use io::{
    compute_stats, parse_timestamp, read_corpus_tsv, read_meta_csv, read_notes_csv,
    read_splits_tsv, read_vocab_tsv, write_corpus_tsv, write_splits_tsv, write_stats_txt,
    write_vocab_tsv, CorpusStats,
};
pub use labels::{compute_labels, filter_patients};
pub use pipeline::{preprocess, PreprocessConfig, PreprocessOutput};
pub use segment::{segment_time_points, to_bow_sequence, TokenBuckets, TIME_BUCKET_SECS};
pub use split::{downsample_negatives, split_and_downsample, split_patients};
pub use text::{load_stop_words, normalize_text, parse_stop_words};
pub use vocab::{bow_normalize, build_vocab};

use std::collections::HashMap;

use crate::tensor::SparseVec;
use crate::{Error, Result};

/// One clinical note as ingested.
#[derive(Debug, Clone, PartialEq)]
pub struct RawNote {
    pub patient_id: String,
    /// UTC seconds.
    pub chart_time: i64,
    pub category: String,
    pub text: String,
}

/// Admission-level metadata for one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientMeta {
    pub patient_id: String,
    pub age_at_admission: f64,
    pub admit_time: i64,
    pub discharge_time: i64,
    pub death_time: Option<i64>,
    pub in_hospital_death: bool,
}

impl PatientMeta {
    /// discharge >= admit; an in-hospital death needs a death time at or
    /// before discharge.
    pub fn validate(&self) -> Result<()> {
        if self.patient_id.is_empty() {
            return Err(Error::InvalidInput("empty patient_id".into()));
        }
        if self.discharge_time < self.admit_time {
            return Err(Error::InvalidInput(format!(
                "patient {}: discharge before admission",
                self.patient_id
            )));
        }
        if self.in_hospital_death {
            match self.death_time {
                Some(d) if d <= self.discharge_time => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "patient {}: in-hospital death without death_time <= discharge_time",
                        self.patient_id
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Dense word ids 0..V-1 in lexicographic word order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    word_to_id: HashMap<String, u32>,
    id_to_word: Vec<String>,
}

impl Vocab {
    /// Builds from words that are already deduplicated; ids follow
    /// lexicographic order regardless of input order.
    pub fn from_words(mut words: Vec<String>) -> Vocab {
        words.sort();
        words.dedup();
        let word_to_id = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocab {
            word_to_id,
            id_to_word: words,
        }
    }

    pub fn size(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.id_to_word.get(id as usize).map(|s| s.as_str())
    }

    pub fn words(&self) -> &[String] {
        &self.id_to_word
    }
}

/// Per-time-point sparse counts for one patient. Raw counts are retained
/// (the topic model reconstructs token lists from them); normalized weight
/// vectors are derived views.
#[derive(Debug, Clone, PartialEq)]
pub struct BowSequence {
    pub patient_id: String,
    /// One entry per time point 1..=T; each is (word_id, count) sorted by id.
    pub counts: Vec<Vec<(u32, u32)>>,
}

impl BowSequence {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// L1-normalized weight vectors; empty time points stay empty.
    pub fn vectors(&self) -> Vec<SparseVec> {
        self.counts.iter().map(|c| bow_normalize(c)).collect()
    }

    pub fn total_tokens(&self) -> u64 {
        self.counts
            .iter()
            .flat_map(|c| c.iter().map(|&(_, n)| n as u64))
            .sum()
    }

    /// True when no time point holds any token.
    pub fn all_empty(&self) -> bool {
        self.counts.iter().all(|c| c.is_empty())
    }
}

/// Mortality labels; monotone by construction (death in hospital implies
/// death within 30 days and within a year of discharge).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Labels {
    pub in_hospital: bool,
    pub post_30d: bool,
    pub post_1y: bool,
}

impl Labels {
    pub fn monotone(&self) -> bool {
        (!self.in_hospital || self.post_30d) && (!self.post_30d || self.post_1y)
    }
}

/// Which mortality outcome a model trains against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    InHospital,
    Post30d,
    Post1y,
}

impl Task {
    pub fn label(&self, l: &Labels) -> bool {
        match self {
            Task::InHospital => l.in_hospital,
            Task::Post30d => l.post_30d,
            Task::Post1y => l.post_1y,
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        match s {
            "hospital" => Ok(Task::InHospital),
            "30d" => Ok(Task::Post30d),
            "1y" => Ok(Task::Post1y),
            other => Err(Error::InvalidInput(format!(
                "unknown task {other:?} (expected hospital, 30d, or 1y)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::InHospital => "hospital",
            Task::Post30d => "30d",
            Task::Post1y => "1y",
        }
    }
}

/// One corpus record: a patient's bag-of-words sequence plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub seq: BowSequence,
    pub labels: Labels,
}

/// Patient-id partition. Vectors keep the deterministic order the split
/// produced them in.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn is_disjoint(&self) -> bool {
        use std::collections::HashSet;
        let mut seen = HashSet::new();
        self.train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .all(|id| seen.insert(id))
    }

    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}
