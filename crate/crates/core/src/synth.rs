//! Synthetic corpus generator with planted topics and a planted
//! mortality signal.
//!
//! Each topic owns a disjoint block of vocabulary words with in-block
//! weights falling off as 1/(rank+1). Per patient, a topic mixture
//! drifts across time points as a multiplicative log-normal random walk;
//! tokens are drawn from the mixture of planted topics. The mortality
//! label is Bernoulli with probability sigmoid(risk score - offset),
//! where the risk score weighs the mixture mass the risk topics hold
//! over the LATE half of the sequence, and the offset is solved by
//! bisection so the expected positive rate matches the target. The late
//! placement makes the signal reachable only by models that carry state
//! across time.
//!
//! Output comes in two equivalent forms: ready-made corpus artifacts
//! (corpus.tsv, vocab.tsv, splits.tsv, stats.txt) and raw notes.csv +
//! meta.csv that reproduce the same counts when run through the
//! preprocessing pipeline. All randomness flows from per-patient seeds
//! derived from the config seed, so generation is order-independent and
//! byte-reproducible.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::corpus::{
    compute_stats, parse_timestamp, write_corpus_tsv, write_splits_tsv, write_stats_txt,
    write_vocab_tsv, BowSequence, CorpusEntry, DatasetSplit, Labels, PatientMeta, RawNote, Vocab,
};
use crate::tensor::{derive_seed, Tensor};
use crate::{Error, Result};

/// Log-space step size of the per-patient mixture random walk.
const DRIFT_SIGMA: f64 = 0.3;
/// Dirichlet concentration of the initial mixture. Below 1 so patients
/// lean on few topics, spreading risk-topic mass widely across patients;
/// a flat start would cap even the generative oracle's AUC well below
/// the planted-signal acceptance bands.
const MIX_ALPHA: f64 = 0.25;
/// Expected fraction of positive labels after offset calibration.
const TARGET_POSITIVE_RATE: f64 = 0.25;
/// All synthetic admissions start here; only relative time matters.
const ADMIT_STAMP: &str = "2100-01-01 00:00:00";
/// Fixed patient age in seconds (40 years of 365.25 days).
const AGE_SECS: i64 = 40 * 31_557_600;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub vocab_size: usize,
    pub n_topics: usize,
    /// Leading topics that carry the mortality signal.
    pub n_risk_topics: usize,
    /// Mean of the geometric sequence-length draw (minimum length 2).
    pub mean_seq_len: f64,
    /// Tokens per non-empty time point.
    pub doc_len: usize,
    /// Probability a time point emits no tokens.
    pub empty_rate: f64,
    /// Risk-topic weight in the label logit; 0 removes all signal.
    pub risk_strength: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            n_patients: 800,
            vocab_size: 200,
            n_topics: 8,
            n_risk_topics: 2,
            mean_seq_len: 10.0,
            doc_len: 60,
            empty_rate: 0.1,
            risk_strength: 6.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_patients == 0
            || self.vocab_size == 0
            || self.n_topics == 0
            || self.doc_len == 0
        {
            return Err(Error::InvalidInput(
                "synth counts must be positive".to_string(),
            ));
        }
        if self.n_risk_topics >= self.n_topics {
            return Err(Error::InvalidInput(format!(
                "n_risk_topics {} must be below n_topics {}",
                self.n_risk_topics, self.n_topics
            )));
        }
        if self.vocab_size < self.n_topics {
            return Err(Error::InvalidInput(
                "vocabulary smaller than topic count".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.empty_rate) {
            return Err(Error::InvalidInput(format!(
                "empty_rate {} outside [0, 1]",
                self.empty_rate
            )));
        }
        if !self.mean_seq_len.is_finite() || self.mean_seq_len < 1.0 {
            return Err(Error::InvalidInput(format!(
                "mean_seq_len {} must be at least 1",
                self.mean_seq_len
            )));
        }
        if !self.risk_strength.is_finite() {
            return Err(Error::InvalidInput("non-finite risk_strength".to_string()));
        }
        Ok(())
    }
}

/// Ground truth the generator plants.
#[derive(Debug, Clone)]
pub struct SynthTruth {
    /// Topic-word distributions, one disjoint word block per row.
    pub phi_star: Vec<Vec<f64>>,
    /// Per-topic label-logit weights.
    pub risk: Vec<f64>,
    /// Logit offset solved for the target positive rate.
    pub offset: f64,
    /// True mixtures per patient and time point, parallel to the
    /// generated entries (empty time points included).
    pub mixtures: Vec<Vec<Vec<f64>>>,
}

impl SynthTruth {
    /// Named-tensor checkpoint with the planted topics and risk weights.
    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let k = self.phi_star.len();
        let v = self.phi_star.first().map_or(0, Vec::len);
        let flat: Vec<f64> = self.phi_star.iter().flatten().copied().collect();
        let mut cp = Checkpoint::new();
        cp.set_meta("offset", self.offset);
        cp.add_tensor("phi_star", Tensor::from_vec(&[k, v], flat)?);
        cp.add_tensor("risk", Tensor::from_vec(&[k], self.risk.clone())?);
        Ok(cp)
    }
}

/// A generated corpus plus its ground truth. Entries are ordered by
/// patient id (fixed-width ids make that the generation order).
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub entries: Vec<CorpusEntry>,
    pub vocab: Vocab,
    pub split: DatasetSplit,
    pub truth: SynthTruth,
}

/// Letter-only words in lexicographic order: base-26 over a..z, fixed
/// width (at least 4 so no word lands on a common stop word), so ids
/// assigned by the vocabulary match generation order and text
/// normalization keeps every token intact.
pub fn synth_words(n: usize) -> Vec<String> {
    let mut width = 4;
    let mut span = 26usize.pow(4);
    while span < n {
        width += 1;
        span *= 26;
    }
    (0..n)
        .map(|i| {
            let mut chars = vec![b'a'; width];
            let mut rest = i;
            for slot in chars.iter_mut().rev() {
                *slot = b'a' + (rest % 26) as u8;
                rest /= 26;
            }
            String::from_utf8(chars).expect("ascii letters")
        })
        .collect()
}

/// Topic-word rows over disjoint blocks: word j of a block carries
/// weight proportional to 1/(j+1). Blocks differ in size by at most one
/// and jointly cover the whole vocabulary.
pub fn planted_topics(n_topics: usize, vocab_size: usize) -> Vec<Vec<f64>> {
    let base = vocab_size / n_topics;
    let extra = vocab_size % n_topics;
    let mut rows = Vec::with_capacity(n_topics);
    let mut start = 0usize;
    for k in 0..n_topics {
        let len = base + usize::from(k < extra);
        let mut row = vec![0.0; vocab_size];
        let norm: f64 = (0..len).map(|j| 1.0 / (j + 1) as f64).sum();
        for j in 0..len {
            row[start + j] = 1.0 / ((j + 1) as f64 * norm);
        }
        rows.push(row);
        start += len;
    }
    rows
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn sample_seq_len(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    let p = (1.0 / mean).min(1.0);
    if p >= 1.0 {
        return 2;
    }
    let u: f64 = rng.gen();
    let t = ((1.0 - u).ln() / (1.0 - p).ln()).floor() as i64 + 1;
    t.max(2) as usize
}

fn sample_from_cumulative(cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cum.last().expect("non-empty cumulative weights");
    let u = rng.gen::<f64>() * total;
    match cum.iter().position(|&c| u < c) {
        Some(i) => i,
        None => cum.len() - 1,
    }
}

struct PatientDraw {
    counts: Vec<Vec<(u32, u32)>>,
    mixtures: Vec<Vec<f64>>,
    /// Mean mixture mass the risk topics hold over the late half, in [0,1].
    risk_mass: f64,
}

/// Per-topic sampling tables: word ids with cumulative weights.
fn topic_tables(phi: &[Vec<f64>]) -> Vec<(Vec<u32>, Vec<f64>)> {
    phi.iter()
        .map(|row| {
            let mut ids = Vec::new();
            let mut cum = Vec::new();
            let mut acc = 0.0;
            for (w, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    acc += p;
                    ids.push(w as u32);
                    cum.push(acc);
                }
            }
            (ids, cum)
        })
        .collect()
}

fn gen_patient(
    cfg: &SynthConfig,
    tables: &[(Vec<u32>, Vec<f64>)],
    seed: u64,
) -> PatientDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cfg.n_topics;
    let t_len = sample_seq_len(cfg.mean_seq_len, &mut rng);

    let mut empty: Vec<bool> = (0..t_len)
        .map(|_| rng.gen::<f64>() < cfg.empty_rate)
        .collect();
    if empty.iter().all(|&e| e) {
        *empty.last_mut().expect("t_len >= 2") = false;
    }

    // Dirichlet(MIX_ALPHA) start via gamma draws, then a log-normal walk.
    let gamma = Gamma::new(MIX_ALPHA, 1.0).expect("valid gamma parameters");
    let mut weights: Vec<f64> = (0..k)
        .map(|_| gamma.sample(&mut rng).max(1e-300))
        .collect();
    let mut mixtures = Vec::with_capacity(t_len);
    let mut counts = Vec::with_capacity(t_len);
    for t in 0..t_len {
        if t > 0 {
            for w in &mut weights {
                let step: f64 = StandardNormal.sample(&mut rng);
                *w *= (DRIFT_SIGMA * step).exp();
            }
        }
        let total: f64 = weights.iter().sum();
        let theta: Vec<f64> = weights.iter().map(|w| w / total).collect();
        weights.clone_from(&theta);

        let mut bag: BTreeMap<u32, u32> = BTreeMap::new();
        if !empty[t] {
            let mut theta_cum = Vec::with_capacity(k);
            let mut acc = 0.0;
            for &p in &theta {
                acc += p;
                theta_cum.push(acc);
            }
            for _ in 0..cfg.doc_len {
                let topic = sample_from_cumulative(&theta_cum, &mut rng);
                let (ids, cum) = &tables[topic];
                let word = ids[sample_from_cumulative(cum, &mut rng)];
                *bag.entry(word).or_insert(0) += 1;
            }
        }
        counts.push(bag.into_iter().collect());
        mixtures.push(theta);
    }

    // Risk reads the mixture over the late half of the stay only.
    let late_start = t_len / 2;
    let late: &[Vec<f64>] = &mixtures[late_start..];
    let risk_mass: f64 = late
        .iter()
        .map(|m| m[..cfg.n_risk_topics].iter().sum::<f64>())
        .sum::<f64>()
        / late.len() as f64;

    PatientDraw {
        counts,
        mixtures,
        risk_mass,
    }
}

/// Offset o with mean_i sigmoid(score_i - o) equal to the target rate.
fn solve_offset(scores: &[f64], target: f64) -> f64 {
    let lo0 = scores.iter().cloned().fold(f64::INFINITY, f64::min) - 40.0;
    let hi0 = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 40.0;
    let rate = |o: f64| scores.iter().map(|&s| sigmoid(s - o)).sum::<f64>() / scores.len() as f64;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn patient_id(index: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(4);
    format!("p{index:0width$}")
}

pub fn gen_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let phi_star = planted_topics(cfg.n_topics, cfg.vocab_size);
    let tables = topic_tables(&phi_star);
    let mut risk = vec![0.0; cfg.n_topics];
    for r in risk.iter_mut().take(cfg.n_risk_topics) {
        *r = cfg.risk_strength;
    }

    let ids: Vec<String> = (0..cfg.n_patients)
        .map(|i| patient_id(i, cfg.n_patients))
        .collect();
    let draws: Vec<PatientDraw> = ids
        .par_iter()
        .map(|id| {
            let seed = derive_seed(cfg.seed, &format!("patient.{id}"));
            gen_patient(cfg, &tables, seed)
        })
        .collect();

    // Label logits weigh the POPULATION-STANDARDIZED late-half risk mass
    // by risk_strength. Raw mass lives in [0,1], so applying the weight
    // directly would cap the logit spread at risk_strength and bound any
    // classifier (even the generative oracle) well below the intended
    // separability; standardizing makes risk_strength the logit scale in
    // population standard deviations. risk_strength = 0 still zeroes
    // every score, so the null corpus carries no signal.
    let masses: Vec<f64> = draws.iter().map(|d| d.risk_mass).collect();
    let mean = masses.iter().sum::<f64>() / masses.len() as f64;
    let var = masses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / masses.len() as f64;
    let sd = var.sqrt();
    let scores: Vec<f64> = if sd > 1e-12 {
        masses
            .iter()
            .map(|m| cfg.risk_strength * (m - mean) / sd)
            .collect()
    } else {
        vec![0.0; masses.len()]
    };
    let offset = solve_offset(&scores, TARGET_POSITIVE_RATE);

    let mut entries = Vec::with_capacity(cfg.n_patients);
    let mut mixtures = Vec::with_capacity(cfg.n_patients);
    for ((id, draw), &score) in ids.iter().zip(draws).zip(&scores) {
        let mut label_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("label.{id}")));
        let positive = label_rng.gen::<f64>() < sigmoid(score - offset);
        entries.push(CorpusEntry {
            seq: BowSequence {
                patient_id: id.clone(),
                counts: draw.counts,
            },
            labels: Labels {
                in_hospital: positive,
                post_30d: positive,
                post_1y: positive,
            },
        });
        mixtures.push(draw.mixtures);
    }

    // Deterministic 3:1:1 prefix split; patients are exchangeable.
    let n = cfg.n_patients;
    let n_val = n / 5;
    let n_test = n / 5;
    let n_train = n - n_val - n_test;
    let split = DatasetSplit {
        train: ids[..n_train].to_vec(),
        validation: ids[n_train..n_train + n_val].to_vec(),
        test: ids[n_train + n_val..].to_vec(),
    };

    Ok(SynthCorpus {
        entries,
        vocab: Vocab::from_words(synth_words(cfg.vocab_size)),
        split,
        truth: SynthTruth {
            phi_star,
            risk,
            offset,
            mixtures,
        },
    })
}

/// True late-half risk mass per patient, the generative oracle score.
pub fn oracle_scores(corpus: &SynthCorpus) -> Vec<f64> {
    corpus
        .truth
        .mixtures
        .iter()
        .map(|per_t| {
            let late = &per_t[per_t.len() / 2..];
            let mut s = 0.0;
            for (j, &r) in corpus.truth.risk.iter().enumerate() {
                s += r * late.iter().map(|m| m[j]).sum::<f64>() / late.len() as f64;
            }
            s
        })
        .collect()
}

/// Writes corpus.tsv, vocab.tsv, splits.tsv, stats.txt, and truth.clnt.
pub fn write_corpus_files(corpus: &SynthCorpus, dir: &Path) -> Result<()> {
    write_corpus_tsv(&dir.join("corpus.tsv"), &corpus.entries)?;
    write_vocab_tsv(&dir.join("vocab.tsv"), &corpus.vocab)?;
    write_splits_tsv(&dir.join("splits.tsv"), &corpus.split)?;
    let stats = compute_stats(&corpus.entries, corpus.vocab.size());
    write_stats_txt(&dir.join("stats.txt"), &stats)?;
    corpus.truth.to_checkpoint()?.save(&dir.join("truth.clnt"))?;
    Ok(())
}

fn format_stamp(secs: i64) -> String {
    chrono::DateTime::from_timestamp(secs, 0)
        .expect("timestamp in range")
        .format("%Y-%m-%d %H:%M:%S")
        .to_string()
}

/// Raw-note view of the corpus: one note per non-empty time point,
/// charted mid-bucket, plus matching admission metadata. Running these
/// through preprocessing (no token floor, no stop words) reproduces the
/// generated counts.
pub fn to_raw(corpus: &SynthCorpus) -> Result<(Vec<RawNote>, Vec<PatientMeta>)> {
    let admit = parse_timestamp(ADMIT_STAMP)?;
    let mut notes = Vec::new();
    let mut metas = Vec::with_capacity(corpus.entries.len());
    for entry in &corpus.entries {
        let id = &entry.seq.patient_id;
        let t_len = entry.seq.len() as i64;
        // Stay of 12T - 1 hours keeps T buckets with the last mid-bucket
        // note strictly inside the stay.
        let discharge = admit + (t_len * 12 - 1) * 3600;
        for (t0, counts) in entry.seq.counts.iter().enumerate() {
            if counts.is_empty() {
                continue;
            }
            let chart = admit + ((t0 as i64) * 12 + 6) * 3600;
            let mut text = String::new();
            for &(word_id, c) in counts {
                let word = corpus
                    .vocab
                    .word(word_id)
                    .ok_or_else(|| Error::Incompatible(format!("word id {word_id} not in vocab")))?;
                for _ in 0..c {
                    if !text.is_empty() {
                        text.push(' ');
                    }
                    text.push_str(word);
                }
            }
            notes.push(RawNote {
                patient_id: id.clone(),
                chart_time: chart,
                category: "clinical_note".to_string(),
                text,
            });
        }
        let dead = entry.labels.in_hospital;
        metas.push(PatientMeta {
            patient_id: id.clone(),
            age_at_admission: AGE_SECS as f64 / 31_557_600.0,
            admit_time: admit,
            discharge_time: discharge,
            death_time: dead.then_some(discharge),
            in_hospital_death: dead,
        });
    }
    Ok((notes, metas))
}

/// Writes notes.csv and meta.csv in the ingestion format.
pub fn write_raw_csv(corpus: &SynthCorpus, dir: &Path) -> Result<()> {
    let admit = parse_timestamp(ADMIT_STAMP)?;
    let (notes, metas) = to_raw(corpus)?;
    let mut notes_out = String::from("patient_id,chart_time,category,text\n");
    for n in &notes {
        notes_out.push_str(&format!(
            "{},{},{},{}\n",
            n.patient_id,
            format_stamp(n.chart_time),
            n.category,
            n.text
        ));
    }
    std::fs::write(dir.join("notes.csv"), notes_out)?;

    let dob = format_stamp(admit - AGE_SECS);
    let mut meta_out =
        String::from("patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death\n");
    for m in &metas {
        let death = m.death_time.map(format_stamp).unwrap_or_default();
        meta_out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.patient_id,
            dob,
            format_stamp(m.admit_time),
            format_stamp(m.discharge_time),
            death,
            u8::from(m.in_hospital_death)
        ));
    }
    std::fs::write(dir.join("meta.csv"), meta_out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        preprocess, read_corpus_tsv, read_splits_tsv, read_vocab_tsv, PreprocessConfig,
    };
    use crate::eval::auc;

    fn small_cfg() -> SynthConfig {
        SynthConfig {
            n_patients: 60,
            vocab_size: 40,
            n_topics: 4,
            n_risk_topics: 1,
            mean_seq_len: 5.0,
            doc_len: 20,
            empty_rate: 0.15,
            risk_strength: 6.0,
            seed: 11,
        }
    }

    #[test]
    fn config_validation() {
        assert!(small_cfg().validate().is_ok());
        let mut c = small_cfg();
        c.n_risk_topics = 4;
        assert!(c.validate().is_err());
        let mut c = small_cfg();
        c.empty_rate = 1.5;
        assert!(c.validate().is_err());
        let mut c = small_cfg();
        c.doc_len = 0;
        assert!(c.validate().is_err());
        let mut c = small_cfg();
        c.mean_seq_len = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn words_are_sorted_letters() {
        let words = synth_words(200);
        assert_eq!(words.len(), 200);
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
        assert!(words.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
        assert_eq!(words.iter().collect::<std::collections::HashSet<_>>().len(), 200);
    }

    #[test]
    fn planted_topics_are_disjoint_distributions() {
        let phi = planted_topics(4, 100);
        let mut covered = vec![false; 100];
        for row in &phi {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let support: Vec<usize> = (0..100).filter(|&w| row[w] > 0.0).collect();
            assert_eq!(support.len(), 25);
            for w in support {
                assert!(!covered[w], "word {w} in two topics");
                covered[w] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
        // In-block weights decay with rank.
        assert!(phi[0][0] > phi[0][1]);
        assert!(phi[0][1] > phi[0][24]);
    }

    #[test]
    fn uneven_vocab_blocks_cover_everything() {
        let phi = planted_topics(3, 10);
        let sizes: Vec<usize> = phi
            .iter()
            .map(|row| row.iter().filter(|&&p| p > 0.0).count())
            .collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn sequences_respect_length_and_emptiness_contracts() {
        let corpus = gen_corpus(&small_cfg()).unwrap();
        assert_eq!(corpus.entries.len(), 60);
        for (entry, mix) in corpus.entries.iter().zip(&corpus.truth.mixtures) {
            assert!(entry.seq.len() >= 2);
            assert_eq!(entry.seq.len(), mix.len());
            assert!(!entry.seq.all_empty());
            for counts in &entry.seq.counts {
                if !counts.is_empty() {
                    let total: u32 = counts.iter().map(|&(_, c)| c).sum();
                    assert_eq!(total, 20);
                }
            }
            for theta in mix {
                let s: f64 = theta.iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_rate_zero_means_no_empty_time_points() {
        let cfg = SynthConfig {
            empty_rate: 0.0,
            ..small_cfg()
        };
        let corpus = gen_corpus(&cfg).unwrap();
        for entry in &corpus.entries {
            assert!(entry.seq.counts.iter().all(|c| !c.is_empty()));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_cfg();
        let a = gen_corpus(&cfg).unwrap();
        let b = gen_corpus(&cfg).unwrap();
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.truth.offset, b.truth.offset);
        let c = gen_corpus(&SynthConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.entries, c.entries);

        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        write_corpus_files(&a, dir_a.path()).unwrap();
        write_corpus_files(&b, dir_b.path()).unwrap();
        write_raw_csv(&a, dir_a.path()).unwrap();
        write_raw_csv(&b, dir_b.path()).unwrap();
        for name in ["corpus.tsv", "vocab.tsv", "splits.tsv", "stats.txt", "truth.clnt", "notes.csv", "meta.csv"] {
            let x = std::fs::read(dir_a.path().join(name)).unwrap();
            let y = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name} differs between identical runs");
        }
    }

    #[test]
    fn positive_rate_near_target() {
        let cfg = SynthConfig {
            n_patients: 500,
            ..small_cfg()
        };
        let corpus = gen_corpus(&cfg).unwrap();
        let rate = corpus
            .entries
            .iter()
            .filter(|e| e.labels.in_hospital)
            .count() as f64
            / 500.0;
        assert!((rate - 0.25).abs() < 0.05, "positive rate {rate}");
    }

    #[test]
    fn zero_signal_offset_is_analytic() {
        // With no risk signal every score is 0 and the offset solves
        // sigmoid(-o) = 1/4, i.e. o = ln 3.
        let cfg = SynthConfig {
            risk_strength: 0.0,
            n_patients: 500,
            ..small_cfg()
        };
        let corpus = gen_corpus(&cfg).unwrap();
        assert!((corpus.truth.offset - 3.0f64.ln()).abs() < 1e-9);
        let rate = corpus
            .entries
            .iter()
            .filter(|e| e.labels.in_hospital)
            .count() as f64
            / 500.0;
        assert!((rate - 0.25).abs() < 0.05, "null positive rate {rate}");
    }

    #[test]
    fn oracle_classifier_recovers_planted_signal() {
        let cfg = SynthConfig {
            n_patients: 400,
            vocab_size: 100,
            n_topics: 4,
            n_risk_topics: 1,
            risk_strength: 6.0,
            ..small_cfg()
        };
        let corpus = gen_corpus(&cfg).unwrap();
        let scores = oracle_scores(&corpus);
        let labels: Vec<bool> = corpus.entries.iter().map(|e| e.labels.in_hospital).collect();
        let oracle_auc = auc(&scores, &labels).unwrap();
        assert!(oracle_auc >= 0.95, "oracle auc {oracle_auc}");
    }

    #[test]
    fn files_round_trip_through_corpus_parsers() {
        let corpus = gen_corpus(&small_cfg()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus_files(&corpus, dir.path()).unwrap();
        let entries = read_corpus_tsv(&dir.path().join("corpus.tsv")).unwrap();
        assert_eq!(entries, corpus.entries);
        let vocab = read_vocab_tsv(&dir.path().join("vocab.tsv")).unwrap();
        assert_eq!(vocab.words(), corpus.vocab.words());
        let split = read_splits_tsv(&dir.path().join("splits.tsv")).unwrap();
        assert_eq!(split.total(), corpus.split.total());
        for id in &corpus.split.train {
            assert!(split.train.contains(id));
        }
        let cp = Checkpoint::load(&dir.path().join("truth.clnt")).unwrap();
        let phi = cp.require_tensor("phi_star").unwrap();
        assert_eq!(phi.dims(), &[4, 40]);
        assert_eq!(cp.require_tensor("risk").unwrap().dims(), &[4]);
    }

    #[test]
    fn split_sizes_partition_patients() {
        let corpus = gen_corpus(&small_cfg()).unwrap();
        assert_eq!(corpus.split.train.len(), 36);
        assert_eq!(corpus.split.validation.len(), 12);
        assert_eq!(corpus.split.test.len(), 12);
        assert!(corpus.split.is_disjoint());
    }

    #[test]
    fn preprocessing_raw_notes_reproduces_counts() {
        let cfg = SynthConfig {
            n_patients: 40,
            vocab_size: 50,
            n_topics: 5,
            n_risk_topics: 1,
            mean_seq_len: 5.0,
            doc_len: 30,
            empty_rate: 0.2,
            risk_strength: 6.0,
            seed: 3,
        };
        let corpus = gen_corpus(&cfg).unwrap();
        let (notes, metas) = to_raw(&corpus).unwrap();
        let pre_cfg = PreprocessConfig {
            min_train_tokens: 0,
            ..PreprocessConfig::default()
        };
        let out = preprocess(&notes, &metas, &pre_cfg).unwrap();
        // Every word appears in training text at this size, so the
        // derived vocabulary matches and ids line up one to one.
        assert_eq!(out.vocab.words(), corpus.vocab.words());
        assert_eq!(out.entries.len(), corpus.entries.len());
        for (got, want) in out.entries.iter().zip(&corpus.entries) {
            assert_eq!(got.seq.patient_id, want.seq.patient_id);
            assert_eq!(got.seq.len(), want.seq.len(), "patient {}", want.seq.patient_id);
            assert_eq!(got.seq.counts, want.seq.counts);
            assert_eq!(got.labels, want.labels);
        }
    }

    #[test]
    fn raw_csv_parses_back(){
        let corpus = gen_corpus(&small_cfg()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_raw_csv(&corpus, dir.path()).unwrap();
        let notes = crate::corpus::read_notes_csv(&dir.path().join("notes.csv")).unwrap();
        let metas = crate::corpus::read_meta_csv(&dir.path().join("meta.csv")).unwrap();
        let (want_notes, want_metas) = to_raw(&corpus).unwrap();
        assert_eq!(notes.len(), want_notes.len());
        assert_eq!(metas.len(), want_metas.len());
        for (a, b) in notes.iter().zip(&want_notes) {
            assert_eq!(a.patient_id, b.patient_id);
            assert_eq!(a.chart_time, b.chart_time);
            assert_eq!(a.text, b.text);
        }
        for (a, b) in metas.iter().zip(&want_metas) {
            assert_eq!(a.patient_id, b.patient_id);
            assert!((a.age_at_admission - 40.0).abs() < 1e-9);
            assert_eq!(a.death_time, b.death_time);
            assert_eq!(a.in_hospital_death, b.in_hospital_death);
        }
    }
}
