//! Evaluation: AUC with midrank tie handling, per-time-point reports,
//! topic-word rankings, and the kNN neighborhood-overlap metric.
//!
//! AUC is computed from rank sums kept as doubled integers, so the result
//! is exactly the pair-counting definition (ties worth one half) with a
//! single float division at the end.

use std::collections::HashSet;

use crate::tensor::Tensor;
use crate::{Error, Result};

/// Probability that a random positive outranks a random negative, ties 1/2.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimMismatch {
            context: "auc",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite score in auc".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::EmptyInput("auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Doubled midranks: a tie group occupying 1-based ranks lo..=hi gets
    // lo+hi each, keeping the positive rank sum an exact integer.
    let mut rank2_pos_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank2 = (i as u64 + 1) + (j as u64 + 1);
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank2_pos_sum += rank2;
            }
        }
        i = j + 1;
    }
    // 2U = 2R - n_pos(n_pos+1).
    let u2 = rank2_pos_sum - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// AUC at one time point; absent when a class is missing there.
#[derive(Debug, Clone, PartialEq)]
pub struct AucPoint {
    pub t: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub auc: Option<f64>,
}

/// Per-time-point AUC. `scores[i]` holds patient i's per-time-point scores
/// (length = that patient's sequence length); at each t only patients whose
/// stay reaches t are evaluated.
pub fn eval_per_time_point(
    scores: &[Vec<f64>],
    labels: &[bool],
    horizon: usize,
) -> Result<Vec<AucPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::DimMismatch {
            context: "eval_per_time_point",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let mut report = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mut s = Vec::new();
        let mut l = Vec::new();
        for (seq, &label) in scores.iter().zip(labels) {
            if seq.len() >= t {
                s.push(seq[t - 1]);
                l.push(label);
            }
        }
        let n_pos = l.iter().filter(|&&x| x).count();
        let n_neg = l.len() - n_pos;
        let value = if n_pos >= 1 && n_neg >= 1 {
            Some(auc(&s, &l)?)
        } else {
            None
        };
        report.push(AucPoint {
            t,
            n_pos,
            n_neg,
            auc: value,
        });
    }
    Ok(report)
}

/// Mean of the defined per-time-point AUC values; absent if none defined.
pub fn mean_auc(report: &[AucPoint]) -> Option<f64> {
    let defined: Vec<f64> = report.iter().filter_map(|p| p.auc).collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Nearest-rank 90th-percentile sequence length; keeps late time points
/// with almost no patients out of the default report.
pub fn default_horizon(seq_lens: &[usize]) -> usize {
    if seq_lens.is_empty() {
        return 1;
    }
    let mut sorted = seq_lens.to_vec();
    sorted.sort_unstable();
    let rank = ((0.9 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1].max(1)
}

/// How topics are laid out in a weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicOrientation {
    /// K x V: topic-word rows (encoder weights, topic-model phi).
    TopicsAsRows,
    /// V x K: word-topic rows (decoder weights); topic k is column k.
    TopicsAsColumns,
}

/// Top-n words for one topic, by descending weight, ties lexicographic.
pub fn top_words(
    matrix: &Tensor,
    orientation: TopicOrientation,
    topic: usize,
    n: usize,
    vocab: &[String],
) -> Result<Vec<(String, f64)>> {
    let (k_dim, v_dim) = match orientation {
        TopicOrientation::TopicsAsRows => (matrix.rows(), matrix.cols()),
        TopicOrientation::TopicsAsColumns => (matrix.cols(), matrix.rows()),
    };
    if topic >= k_dim {
        return Err(Error::InvalidInput(format!(
            "topic {topic} out of range (K = {k_dim})"
        )));
    }
    if vocab.len() != v_dim {
        return Err(Error::DimMismatch {
            context: "top_words",
            expected: v_dim,
            got: vocab.len(),
        });
    }
    let weight = |w: usize| match orientation {
        TopicOrientation::TopicsAsRows => matrix.at2(topic, w),
        TopicOrientation::TopicsAsColumns => matrix.at2(w, topic),
    };
    let mut ranked: Vec<(String, f64)> = (0..v_dim).map(|w| (vocab[w].clone(), weight(w))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    Ok(ranked)
}

/// Table-style text: one "T<k>: w1, w2, ..." line per topic.
pub fn topic_report_text(topics: &[Vec<(String, f64)>]) -> String {
    let mut out = String::new();
    for (k, words) in topics.iter().enumerate() {
        let list: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
        out.push_str(&format!("T{k}: {}\n", list.join(", ")));
    }
    out
}

/// CSV lines for an AUC report: task,model,t,n_pos,n_neg,auc (header
/// included; absent AUC leaves the field empty).
pub fn auc_report_csv(task: &str, model: &str, report: &[AucPoint]) -> String {
    let mut out = String::from("task,model,t,n_pos,n_neg,auc\n");
    for p in report {
        let auc_field = p.auc.map(|a| format!("{a:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{task},{model},{},{},{},{auc_field}\n",
            p.t, p.n_pos, p.n_neg
        ));
    }
    out
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the k nearest vectors to `i` (self excluded), distance ties
/// broken by ascending index.
fn knn_indices(vectors: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..vectors.len())
        .filter(|&j| j != i)
        .map(|j| (dist2(&vectors[i], &vectors[j]), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, j)| j).collect()
}

fn check_knn_input(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if n < k + 1 {
        return Err(Error::InvalidInput(format!(
            "need at least {} vectors for k = {k}, got {n}",
            k + 1
        )));
    }
    Ok(())
}

/// Mean over documents of |kNN in candidate space intersected with kNN in
/// reference space| / k. Document identity is the shared index.
pub fn knn_overlap_with_reference(
    candidate: &[Vec<f64>],
    reference: &[Vec<f64>],
    k: usize,
) -> Result<f64> {
    if candidate.len() != reference.len() {
        return Err(Error::DimMismatch {
            context: "knn_overlap_with_reference",
            expected: candidate.len(),
            got: reference.len(),
        });
    }
    check_knn_input(candidate.len(), k)?;
    let mut total = 0.0;
    for i in 0..candidate.len() {
        let a: HashSet<usize> = knn_indices(candidate, i, k).into_iter().collect();
        let b: HashSet<usize> = knn_indices(reference, i, k).into_iter().collect();
        total += a.intersection(&b).count() as f64 / k as f64;
    }
    Ok(total / candidate.len() as f64)
}

/// Mean over documents of the fraction of their kNN that belong to the
/// same patient.
pub fn knn_overlap_same_patient(
    latents: &[Vec<f64>],
    patient_of_doc: &[usize],
    k: usize,
) -> Result<f64> {
    if latents.len() != patient_of_doc.len() {
        return Err(Error::DimMismatch {
            context: "knn_overlap_same_patient",
            expected: latents.len(),
            got: patient_of_doc.len(),
        });
    }
    check_knn_input(latents.len(), k)?;
    let mut total = 0.0;
    for i in 0..latents.len() {
        let neighbors = knn_indices(latents, i, k);
        let same = neighbors
            .iter()
            .filter(|&&j| patient_of_doc[j] == patient_of_doc[i])
            .count();
        total += same as f64 / k as f64;
    }
    Ok(total / latents.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Pair-counting AUC: wins + half-ties over all pos-neg pairs, with the
    /// numerator kept integral.
    fn auc_pair_counting(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins2: u64 = 0;
        let mut n_pos: u64 = 0;
        for (i, &li) in labels.iter().enumerate() {
            if !li {
                continue;
            }
            n_pos += 1;
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                if scores[i] > scores[j] {
                    wins2 += 2;
                } else if scores[i] == scores[j] {
                    wins2 += 1;
                }
            }
        }
        let n_neg = labels.len() as u64 - n_pos;
        wins2 as f64 / (2 * n_pos * n_neg) as f64
    }

    #[test]
    fn auc_hand_values() {
        assert_eq!(auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5, 0.5], &[true, false, true]).unwrap(), 0.5);
        assert_eq!(
            auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(),
            0.75
        );
    }

    #[test]
    fn auc_rejects_degenerate_input() {
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(auc(&[0.1], &[true, false]).is_err());
        assert!(auc(&[f64::NAN, 0.2], &[true, false]).is_err());
    }

    #[test]
    fn auc_equals_pair_counting_exactly_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let n = rng.gen_range(2..40);
            // Draw from a tiny value set so ties are common.
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 5.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            labels[0] = true;
            labels[n - 1] = false;
            let fast = auc(&scores, &labels).unwrap();
            let slow = auc_pair_counting(&scores, &labels);
            assert_eq!(fast, slow, "trial {trial} mismatch");
        }
    }

    #[test]
    fn auc_complement_sums_to_one() {
        let scores = [0.3, 0.1, 0.4, 0.1, 0.5, 0.9, 0.2];
        let labels = [true, false, true, true, false, true, false];
        let flipped: Vec<bool> = labels.iter().map(|&l| !l).collect();
        let a = auc(&scores, &labels).unwrap();
        let b = auc(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn auc_invariant_under_increasing_transform(
            raw in proptest::collection::vec((0u8..10, proptest::bool::ANY), 2..30)
        ) {
            let scores: Vec<f64> = raw.iter().map(|&(s, _)| s as f64).collect();
            let labels: Vec<bool> = raw.iter().map(|&(_, l)| l).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let transformed: Vec<f64> = scores.iter().map(|&s| (s * 0.7).exp() + 3.0).collect();
            prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&transformed, &labels).unwrap());
        }
    }

    #[test]
    fn per_time_point_exclusion_rule() {
        // Patient lengths 1, 2, 3; only length-3 patient reaches t=3.
        let scores = vec![vec![0.9], vec![0.2, 0.3], vec![0.4, 0.8, 0.5]];
        let labels = vec![true, false, true];
        let report = eval_per_time_point(&scores, &labels, 3).unwrap();
        assert_eq!(report[0].n_pos, 2);
        assert_eq!(report[0].n_neg, 1);
        assert_eq!(report[0].auc, Some(auc(&[0.9, 0.2, 0.4], &labels).unwrap()));
        assert_eq!(report[1].n_pos, 1);
        assert_eq!(report[1].n_neg, 1);
        // t=3 has a single patient: one class only, AUC absent.
        assert_eq!(report[2].n_pos, 1);
        assert_eq!(report[2].n_neg, 0);
        assert_eq!(report[2].auc, None);
    }

    #[test]
    fn per_time_point_matches_naive_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 25;
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let len = rng.gen_range(1..6);
                (0..len).map(|_| rng.gen::<f64>()).collect()
            })
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let report = eval_per_time_point(&scores, &labels, 6).unwrap();
        for t in 1..=6 {
            let mut s = Vec::new();
            let mut l = Vec::new();
            for i in 0..n {
                if scores[i].len() >= t {
                    s.push(scores[i][t - 1]);
                    l.push(labels[i]);
                }
            }
            let expect = if l.iter().any(|&x| x) && l.iter().any(|&x| !x) {
                Some(auc_pair_counting(&s, &l))
            } else {
                None
            };
            assert_eq!(report[t - 1].auc, expect, "t = {t}");
            assert_eq!(report[t - 1].n_pos + report[t - 1].n_neg, l.len());
        }
    }

    #[test]
    fn horizon_is_ninetieth_percentile() {
        let lens: Vec<usize> = (1..=10).collect();
        assert_eq!(default_horizon(&lens), 9);
        assert_eq!(default_horizon(&[4]), 4);
        assert_eq!(default_horizon(&[]), 1);
    }

    fn vocab(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i:02}")).collect()
    }

    #[test]
    fn top_words_identity_matrix() {
        let m = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let top = top_words(&m, TopicOrientation::TopicsAsRows, 0, 1, &vocab(2)).unwrap();
        assert_eq!(top, vec![("w00".to_string(), 1.0)]);
    }

    #[test]
    fn top_words_all_equal_is_lexicographic() {
        let m = Tensor::from_vec(&[1, 4], vec![0.5; 4]).unwrap();
        let words = vec!["delta".to_string(), "alpha".into(), "charlie".into(), "bravo".into()];
        let top = top_words(&m, TopicOrientation::TopicsAsRows, 0, 3, &words).unwrap();
        let names: Vec<&str> = top.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(names, vec!["alpha", "bravo", "charlie"]);
    }

    #[test]
    fn top_words_column_orientation_and_bounds() {
        // V x K = 3 x 2; topic 1 is the second column.
        let m = Tensor::from_vec(&[3, 2], vec![0.1, 0.9, 0.2, 0.8, 0.3, 0.7]).unwrap();
        let top = top_words(&m, TopicOrientation::TopicsAsColumns, 1, 2, &vocab(3)).unwrap();
        assert_eq!(top[0], ("w00".to_string(), 0.9));
        assert_eq!(top[1], ("w01".to_string(), 0.8));
        assert!(top_words(&m, TopicOrientation::TopicsAsColumns, 2, 1, &vocab(3)).is_err());
        assert!(top_words(&m, TopicOrientation::TopicsAsRows, 0, 1, &vocab(3)).is_err());
    }

    #[test]
    fn top_words_truncates_and_weights_non_increasing() {
        let m = Tensor::from_vec(&[1, 5], vec![0.3, 0.9, 0.1, 0.9, 0.5]).unwrap();
        let top = top_words(&m, TopicOrientation::TopicsAsRows, 0, 50, &vocab(5)).unwrap();
        assert_eq!(top.len(), 5);
        assert!(top.windows(2).all(|p| p[0].1 >= p[1].1));
    }

    #[test]
    fn report_text_format() {
        let topics = vec![
            vec![("sepsis".to_string(), 0.9), ("shock".to_string(), 0.5)],
            vec![("renal".to_string(), 0.7)],
        ];
        assert_eq!(topic_report_text(&topics), "T0: sepsis, shock\nT1: renal\n");
    }

    #[test]
    fn csv_format_includes_absent_auc() {
        let report = vec![
            AucPoint { t: 1, n_pos: 3, n_neg: 5, auc: Some(0.8125) },
            AucPoint { t: 2, n_pos: 0, n_neg: 4, auc: None },
        ];
        let csv = auc_report_csv("hospital", "lstm_e", &report);
        assert_eq!(
            csv,
            "task,model,t,n_pos,n_neg,auc\nhospital,lstm_e,1,3,5,0.812500\nhospital,lstm_e,2,0,4,\n"
        );
    }

    #[test]
    fn knn_identical_spaces_give_full_overlap() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let overlap = knn_overlap_with_reference(&pts, &pts.clone(), 3).unwrap();
        assert_eq!(overlap, 1.0);
    }

    #[test]
    fn knn_mode_a_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let b: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let ab = knn_overlap_with_reference(&a, &b, 4).unwrap();
        let ba = knn_overlap_with_reference(&b, &a, 4).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn knn_separated_patient_clusters_score_one() {
        // Two tight clusters far apart, one patient each.
        let mut latents = Vec::new();
        let mut owners = Vec::new();
        for i in 0..4 {
            latents.push(vec![0.0 + 0.01 * i as f64, 0.0]);
            owners.push(0);
        }
        for i in 0..4 {
            latents.push(vec![100.0 + 0.01 * i as f64, 0.0]);
            owners.push(1);
        }
        assert_eq!(knn_overlap_same_patient(&latents, &owners, 1).unwrap(), 1.0);
        assert_eq!(knn_overlap_same_patient(&latents, &owners, 3).unwrap(), 1.0);
    }

    #[test]
    fn knn_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 20;
        let k = 3;
        let cand: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
        let refs: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
        // Independent re-implementation: full distance matrix, selection sort.
        let brute_knn = |vs: &[Vec<f64>], i: usize| -> Vec<usize> {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&x, &y| {
                let dx: f64 = vs[i].iter().zip(&vs[x]).map(|(a, b)| (a - b) * (a - b)).sum();
                let dy: f64 = vs[i].iter().zip(&vs[y]).map(|(a, b)| (a - b) * (a - b)).sum();
                dx.total_cmp(&dy).then(x.cmp(&y))
            });
            others.truncate(k);
            others
        };
        let mut total = 0.0;
        for i in 0..n {
            let a: HashSet<usize> = brute_knn(&cand, i).into_iter().collect();
            let b: HashSet<usize> = brute_knn(&refs, i).into_iter().collect();
            total += a.intersection(&b).count() as f64 / k as f64;
        }
        let expected = total / n as f64;
        assert_eq!(knn_overlap_with_reference(&cand, &refs, k).unwrap(), expected);
    }

    #[test]
    fn knn_rejects_too_few_vectors() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(knn_overlap_with_reference(&pts, &pts.clone(), 2).is_err());
        assert!(knn_overlap_same_patient(&pts, &[0, 1], 2).is_err());
    }
}
