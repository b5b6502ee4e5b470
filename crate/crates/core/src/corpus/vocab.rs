//! tf-idf-restricted vocabulary and bag-of-words normalization.

use std::collections::{BTreeMap, HashMap};

use super::Vocab;
use crate::tensor::SparseVec;
use crate::{Error, Result};

/// Per training patient: score each word by tf * ln(N/df), where tf is the
/// word count in that patient's concatenated notes and df counts training
/// patients containing the word. Each patient keeps its `cap` best words
/// (ties by word, ascending); the vocabulary is the union, ids assigned in
/// lexicographic order.
pub fn build_vocab(
    train_patients: &[(String, BTreeMap<String, u32>)],
    cap: usize,
) -> Result<Vocab> {
    if train_patients.is_empty() {
        return Err(Error::EmptyInput("no training patients for vocabulary".into()));
    }
    let n = train_patients.len() as f64;
    let mut df: HashMap<&str, u32> = HashMap::new();
    for (_, counts) in train_patients {
        for word in counts.keys() {
            *df.entry(word.as_str()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<String> = Vec::new();
    for (_, counts) in train_patients {
        let mut scored: Vec<(&str, f64)> = counts
            .iter()
            .map(|(w, &tf)| {
                let idf = (n / df[w.as_str()] as f64).ln();
                (w.as_str(), tf as f64 * idf)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.extend(scored.iter().take(cap).map(|(w, _)| w.to_string()));
    }
    Ok(Vocab::from_words(kept))
}

/// Divides each count by the bucket total; the empty vector stays empty.
pub fn bow_normalize(counts: &[(u32, u32)]) -> SparseVec {
    let total: u64 = counts.iter().map(|&(_, n)| n as u64).sum();
    if total == 0 {
        return Vec::new();
    }
    counts
        .iter()
        .map(|&(id, n)| (id, n as f64 / total as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patient(id: &str, words: &[(&str, u32)]) -> (String, BTreeMap<String, u32>) {
        (
            id.to_string(),
            words.iter().map(|&(w, n)| (w.to_string(), n)).collect(),
        )
    }

    #[test]
    fn single_patient_below_cap_keeps_everything() {
        let vocab = build_vocab(&[patient("p", &[("c", 1), ("a", 2), ("b", 9)])], 500).unwrap();
        assert_eq!(vocab.size(), 3);
        // ids are lexicographic regardless of counts
        assert_eq!(vocab.id("a"), Some(0));
        assert_eq!(vocab.id("b"), Some(1));
        assert_eq!(vocab.id("c"), Some(2));
    }

    #[test]
    fn shared_word_scores_zero_and_loses_under_cap() {
        // b appears in both patients, so idf = ln(2/2) = 0
        let vocab = build_vocab(
            &[
                patient("p1", &[("a", 5), ("b", 1)]),
                patient("p2", &[("b", 4), ("c", 2)]),
            ],
            1,
        )
        .unwrap();
        assert_eq!(vocab.words(), &["a".to_string(), "c".to_string()]);
    }

    #[test]
    fn zero_score_words_survive_when_under_cap() {
        let vocab = build_vocab(
            &[patient("p1", &[("a", 1), ("b", 2)]), patient("p2", &[("a", 3), ("b", 1)])],
            500,
        )
        .unwrap();
        assert_eq!(vocab.size(), 2);
    }

    #[test]
    fn score_ties_break_lexicographically() {
        // both words have identical tf and df, cap 1 keeps the smaller one
        let vocab = build_vocab(
            &[patient("p1", &[("zebra", 2), ("apple", 2)]), patient("p2", &[("other", 1)])],
            1,
        )
        .unwrap();
        assert!(vocab.id("apple").is_some());
        assert!(vocab.id("zebra").is_none());
    }

    #[test]
    fn empty_train_set_is_an_error() {
        assert!(build_vocab(&[], 500).is_err());
    }

    #[test]
    fn normalize_divides_by_total() {
        assert_eq!(bow_normalize(&[(7, 2), (9, 2)]), vec![(7, 0.5), (9, 0.5)]);
        assert_eq!(bow_normalize(&[(1, 1), (2, 3)]), vec![(1, 0.25), (2, 0.75)]);
        assert!(bow_normalize(&[]).is_empty());
    }

    #[test]
    fn normalized_vectors_sum_to_one() {
        let v = bow_normalize(&[(0, 3), (5, 1), (9, 7)]);
        let sum: f64 = v.iter().map(|&(_, w)| w).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
