//! End-to-end preprocessing: notes and metadata in, corpus artifacts out.
//!
//! Pipeline order matters and is fixed: discharge summaries are dropped at
//! ingestion, text is normalized per note, patients are bucketed into
//! 12-hour time points, the age filter runs before the split, the split
//! runs before the training-set token floor, and the vocabulary is built
//! from post-floor training patients only. Patients whose sequences end up
//! with no in-vocabulary token at all are removed last.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use super::{
    build_vocab, compute_labels, compute_stats, filter_patients, segment_time_points,
    split_patients, to_bow_sequence, write_corpus_tsv, write_splits_tsv, write_stats_txt,
    write_vocab_tsv, CorpusEntry, CorpusStats, DatasetSplit, PatientMeta, RawNote, TokenBuckets,
    Vocab,
};
use super::text::normalize_text;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub seed: u64,
    /// Per-patient cap on vocabulary candidates.
    pub vocab_cap: usize,
    pub min_age: f64,
    /// Training patients below this total token count are removed.
    pub min_train_tokens: u64,
    pub stop_words: HashSet<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            seed: 0,
            vocab_cap: 500,
            min_age: 18.0,
            min_train_tokens: 100,
            stop_words: HashSet::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    /// Sorted by patient id.
    pub entries: Vec<CorpusEntry>,
    pub vocab: Vocab,
    /// Partition of the retained patients; not downsampled.
    pub split: DatasetSplit,
    pub stats: CorpusStats,
    pub n_notes_read: usize,
    pub n_notes_dropped: usize,
    pub n_patients_read: usize,
    pub n_patients_dropped: usize,
}

impl PreprocessOutput {
    /// Writes corpus.tsv, vocab.tsv, splits.tsv, and stats.txt.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        write_corpus_tsv(&dir.join("corpus.tsv"), &self.entries)?;
        write_vocab_tsv(&dir.join("vocab.tsv"), &self.vocab)?;
        write_splits_tsv(&dir.join("splits.tsv"), &self.split)?;
        write_stats_txt(&dir.join("stats.txt"), &self.stats)?;
        Ok(())
    }
}

fn is_discharge_summary(category: &str) -> bool {
    category.trim().to_lowercase().replace(' ', "_") == "discharge_summary"
}

pub fn preprocess(
    notes: &[RawNote],
    metas: &[PatientMeta],
    config: &PreprocessConfig,
) -> Result<PreprocessOutput> {
    let meta_by_id: BTreeMap<&str, &PatientMeta> = metas
        .iter()
        .map(|m| (m.patient_id.as_str(), m))
        .collect();
    if meta_by_id.len() != metas.len() {
        return Err(Error::InvalidInput("duplicate patient in metadata".into()));
    }

    // Tokenize per note, skipping discharge summaries and notes without
    // metadata.
    let mut notes_by_patient: BTreeMap<&str, Vec<(i64, Vec<String>)>> = BTreeMap::new();
    let mut n_notes_dropped = 0usize;
    for note in notes {
        if is_discharge_summary(&note.category) || !meta_by_id.contains_key(note.patient_id.as_str())
        {
            n_notes_dropped += 1;
            continue;
        }
        let tokens = normalize_text(&note.text, &config.stop_words);
        if tokens.is_empty() {
            n_notes_dropped += 1;
            continue;
        }
        notes_by_patient
            .entry(note.patient_id.as_str())
            .or_default()
            .push((note.chart_time, tokens));
    }

    // Bucket into time points; patients with no usable note disappear here.
    let mut buckets_by_id: HashMap<&str, TokenBuckets> = HashMap::new();
    let mut candidates: Vec<&PatientMeta> = Vec::new();
    for (&id, patient_notes) in &notes_by_patient {
        let meta = meta_by_id[id];
        match segment_time_points(patient_notes, meta) {
            Ok(buckets) => {
                buckets_by_id.insert(id, buckets);
                candidates.push(meta);
            }
            Err(Error::EmptyInput(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let total_tokens: BTreeMap<String, u64> = buckets_by_id
        .iter()
        .map(|(&id, b)| (id.to_string(), b.total_tokens()))
        .collect();

    // Age filter, then split, then the token floor on training patients.
    let adults: Vec<PatientMeta> = candidates
        .iter()
        .filter(|m| m.age_at_admission >= config.min_age)
        .map(|&m| m.clone())
        .collect();
    let adult_ids: Vec<String> = adults.iter().map(|m| m.patient_id.clone()).collect();
    let split = split_patients(&adult_ids, config.seed)?;
    let train_set: HashSet<String> = split.train.iter().cloned().collect();
    let survivors = filter_patients(
        &adults,
        &total_tokens,
        &train_set,
        config.min_age,
        config.min_train_tokens,
    );
    // Vocabulary from training survivors only.
    let train_pool: Vec<(String, BTreeMap<String, u32>)> = survivors
        .iter()
        .filter(|m| train_set.contains(&m.patient_id))
        .map(|m| {
            let mut pooled: BTreeMap<String, u32> = BTreeMap::new();
            for bucket in &buckets_by_id[m.patient_id.as_str()].buckets {
                for (word, &n) in bucket {
                    *pooled.entry(word.clone()).or_insert(0) += n;
                }
            }
            (m.patient_id.clone(), pooled)
        })
        .collect();
    let vocab = build_vocab(&train_pool, config.vocab_cap)?;

    // Project every survivor onto the vocabulary; sequences left with no
    // in-vocabulary token are dropped.
    let mut entries: Vec<CorpusEntry> = Vec::new();
    let mut kept_ids: HashSet<String> = HashSet::new();
    for meta in &survivors {
        let seq = to_bow_sequence(&buckets_by_id[meta.patient_id.as_str()], &vocab);
        if seq.all_empty() {
            continue;
        }
        kept_ids.insert(meta.patient_id.clone());
        entries.push(CorpusEntry {
            seq,
            labels: compute_labels(meta),
        });
    }
    entries.sort_by(|a, b| a.seq.patient_id.cmp(&b.seq.patient_id));
    if entries.is_empty() {
        return Err(Error::EmptyInput("no patients survived preprocessing".into()));
    }

    let filter_ids = |ids: &[String]| -> Vec<String> {
        ids.iter().filter(|id| kept_ids.contains(*id)).cloned().collect()
    };
    let split = DatasetSplit {
        train: filter_ids(&split.train),
        validation: filter_ids(&split.validation),
        test: filter_ids(&split.test),
    };

    let stats = compute_stats(&entries, vocab.size());
    Ok(PreprocessOutput {
        n_notes_read: notes.len(),
        n_notes_dropped,
        n_patients_read: metas.len(),
        n_patients_dropped: metas.len() - entries.len(),
        entries,
        vocab,
        split,
        stats,
    })
}
