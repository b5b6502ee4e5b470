//! Latent Dirichlet Allocation via collapsed Gibbs sampling, plus fold-in
//! inference for unseen documents. Feeds the topic-feature baselines.
//!
//! The sampler is sequential by definition (each token resample sees the
//! counts left by the previous one), so fitting is single-threaded.
//! Fold-in holds the fitted topic-word distributions fixed, which makes
//! per-document inference independent and parallelizable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::corpus::BowSequence;
use crate::tensor::{derive_seed, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub k: usize,
    pub v: usize,
    pub alpha: f64,
    pub beta: f64,
    /// K x V; empty when the model was loaded from a checkpoint (phi is the
    /// only state inference needs).
    pub topic_word_counts: Vec<Vec<u64>>,
    pub topic_totals: Vec<u64>,
    /// K x V posterior-mean topic-word distributions; rows sum to 1.
    pub phi: Vec<Vec<f64>>,
}

/// Default document-topic prior for a given K.
pub fn default_alpha(k: usize) -> f64 {
    50.0 / k as f64
}

pub const DEFAULT_BETA: f64 = 0.01;

/// Unnormalized collapsed-Gibbs conditional for assigning word w in doc d
/// to each topic, with the token itself already removed from all counts.
fn gibbs_weights(
    w: usize,
    doc_topic: &[u64],
    topic_word_counts: &[Vec<u64>],
    topic_totals: &[u64],
    alpha: f64,
    beta: f64,
    v: usize,
    out: &mut [f64],
) {
    let vb = v as f64 * beta;
    for k in 0..out.len() {
        out[k] = (doc_topic[k] as f64 + alpha) * (topic_word_counts[k][w] as f64 + beta)
            / (topic_totals[k] as f64 + vb);
    }
}

fn sample_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (j, &w) in weights.iter().enumerate() {
        if u < w {
            return j;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Sampler state over the training corpus. Counts are redundant with the
/// assignments and must stay consistent after every sweep.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub docs: Vec<Vec<u32>>,
    pub assignments: Vec<Vec<usize>>,
    pub doc_topic_counts: Vec<Vec<u64>>,
    pub topic_word_counts: Vec<Vec<u64>>,
    pub topic_totals: Vec<u64>,
    pub k: usize,
    pub v: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl GibbsState {
    pub fn init(
        docs: Vec<Vec<u32>>,
        k: usize,
        v: usize,
        alpha: f64,
        beta: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<GibbsState> {
        if k == 0 || v == 0 {
            return Err(Error::InvalidInput("K and V must be positive".into()));
        }
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidInput("alpha and beta must be > 0".into()));
        }
        if docs.iter().all(|d| d.is_empty()) {
            return Err(Error::EmptyInput("no tokens to fit a topic model on".into()));
        }
        for doc in &docs {
            if let Some(&w) = doc.iter().find(|&&w| w as usize >= v) {
                return Err(Error::InvalidInput(format!(
                    "token id {w} out of vocabulary (V = {v})"
                )));
            }
        }
        let mut state = GibbsState {
            assignments: docs.iter().map(|d| Vec::with_capacity(d.len())).collect(),
            doc_topic_counts: vec![vec![0; k]; docs.len()],
            topic_word_counts: vec![vec![0; v]; k],
            topic_totals: vec![0; k],
            docs,
            k,
            v,
            alpha,
            beta,
        };
        for d in 0..state.docs.len() {
            for i in 0..state.docs[d].len() {
                let z = rng.gen_range(0..k);
                state.assignments[d].push(z);
                let w = state.docs[d][i] as usize;
                state.doc_topic_counts[d][z] += 1;
                state.topic_word_counts[z][w] += 1;
                state.topic_totals[z] += 1;
            }
        }
        Ok(state)
    }

    /// One full pass in fixed document and token order.
    pub fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        let mut weights = vec![0.0; self.k];
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.assignments[d][i];
                self.doc_topic_counts[d][old] -= 1;
                self.topic_word_counts[old][w] -= 1;
                self.topic_totals[old] -= 1;
                gibbs_weights(
                    w,
                    &self.doc_topic_counts[d],
                    &self.topic_word_counts,
                    &self.topic_totals,
                    self.alpha,
                    self.beta,
                    self.v,
                    &mut weights,
                );
                let z = sample_index(&weights, rng);
                self.assignments[d][i] = z;
                self.doc_topic_counts[d][z] += 1;
                self.topic_word_counts[z][w] += 1;
                self.topic_totals[z] += 1;
            }
        }
    }

    /// Recomputes every count from the assignments and compares.
    pub fn consistent(&self) -> bool {
        let mut dt = vec![vec![0u64; self.k]; self.docs.len()];
        let mut tw = vec![vec![0u64; self.v]; self.k];
        let mut tt = vec![0u64; self.k];
        for d in 0..self.docs.len() {
            if self.assignments[d].len() != self.docs[d].len() {
                return false;
            }
            for (i, &z) in self.assignments[d].iter().enumerate() {
                dt[d][z] += 1;
                tw[z][self.docs[d][i] as usize] += 1;
                tt[z] += 1;
            }
        }
        dt == self.doc_topic_counts && tw == self.topic_word_counts && tt == self.topic_totals
    }

    fn into_model(self) -> LdaModel {
        let vb = self.v as f64 * self.beta;
        let phi = (0..self.k)
            .map(|k| {
                let denom = self.topic_totals[k] as f64 + vb;
                (0..self.v)
                    .map(|w| (self.topic_word_counts[k][w] as f64 + self.beta) / denom)
                    .collect()
            })
            .collect();
        LdaModel {
            k: self.k,
            v: self.v,
            alpha: self.alpha,
            beta: self.beta,
            topic_word_counts: self.topic_word_counts,
            topic_totals: self.topic_totals,
            phi,
        }
    }
}

pub fn fit_gibbs(
    docs: Vec<Vec<u32>>,
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> Result<LdaModel> {
    if iterations == 0 {
        return Err(Error::InvalidInput("iterations must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GibbsState::init(docs, k, v, alpha, beta, &mut rng)?;
    for _ in 0..iterations {
        state.sweep(&mut rng);
        debug_assert!(state.consistent());
    }
    Ok(state.into_model())
}

/// Fold-in inference: resample topic assignments for one document while the
/// fitted topic-word distributions stay frozen. Returns the mean of
/// (n_dk + alpha) / (n_d + K*alpha) over the retained samples.
pub fn infer_doc(
    model: &LdaModel,
    doc: &[u32],
    burn_in: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let k = model.k;
    if doc.is_empty() {
        return Ok(vec![1.0 / k as f64; k]);
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one retained sample".into()));
    }
    if let Some(&w) = doc.iter().find(|&&w| w as usize >= model.v) {
        return Err(Error::Incompatible(format!(
            "token id {w} out of vocabulary (V = {})",
            model.v
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments: Vec<usize> = Vec::with_capacity(doc.len());
    let mut doc_topic = vec![0u64; k];
    for _ in doc {
        let z = rng.gen_range(0..k);
        assignments.push(z);
        doc_topic[z] += 1;
    }
    let n_d = doc.len() as f64;
    let ka = k as f64 * model.alpha;
    let mut theta = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for sweep in 0..burn_in + samples {
        for (i, &w) in doc.iter().enumerate() {
            let old = assignments[i];
            doc_topic[old] -= 1;
            for (j, wt) in weights.iter_mut().enumerate() {
                *wt = (doc_topic[j] as f64 + model.alpha) * model.phi[j][w as usize];
            }
            let z = sample_index(&weights, &mut rng);
            assignments[i] = z;
            doc_topic[z] += 1;
        }
        if sweep >= burn_in {
            for j in 0..k {
                theta[j] += (doc_topic[j] as f64 + model.alpha) / (n_d + ka);
            }
        }
    }
    for v in theta.iter_mut() {
        *v /= samples as f64;
    }
    Ok(theta)
}

/// Mean of the non-empty topic vectors among time points 1..=t. A zero
/// vector marks an empty time point and is skipped; if every time point in
/// the prefix is empty the prior-only uniform vector is returned, matching
/// inference on an empty document.
pub fn average_theta_upto(thetas: &[Vec<f64>], t: usize) -> Result<Vec<f64>> {
    if t == 0 || t > thetas.len() {
        return Err(Error::InvalidInput(format!(
            "time point {t} out of range 1..={}",
            thetas.len()
        )));
    }
    let k = thetas[0].len();
    let mut sum = vec![0.0; k];
    let mut n = 0usize;
    for theta in &thetas[..t] {
        if theta.iter().all(|&x| x == 0.0) {
            continue;
        }
        if theta.len() != k {
            return Err(Error::DimMismatch {
                context: "average_theta_upto",
                expected: k,
                got: theta.len(),
            });
        }
        for (s, &x) in sum.iter_mut().zip(theta) {
            *s += x;
        }
        n += 1;
    }
    if n == 0 {
        return Ok(vec![1.0 / k as f64; k]);
    }
    for s in sum.iter_mut() {
        *s /= n as f64;
    }
    Ok(sum)
}

/// Rebuilds the integer token list for one time point from stored counts.
pub fn expand_counts(counts: &[(u32, u32)]) -> Vec<u32> {
    let mut tokens = Vec::with_capacity(counts.iter().map(|&(_, n)| n as usize).sum());
    for &(w, n) in counts {
        tokens.extend(std::iter::repeat(w).take(n as usize));
    }
    tokens
}

/// Per-time-point topic vectors for one patient. Empty time points map to
/// the zero vector (the sequence model skips them); non-empty ones run
/// fold-in inference with a seed derived from the patient id and t.
pub fn topic_vectors_for_sequence(
    model: &LdaModel,
    seq: &BowSequence,
    burn_in: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    seq.counts
        .par_iter()
        .enumerate()
        .map(|(idx, counts)| {
            if counts.is_empty() {
                return Ok(vec![0.0; model.k]);
            }
            let tokens = expand_counts(counts);
            let doc_seed = derive_seed(seed, &format!("lda.{}.{}", seq.patient_id, idx + 1));
            infer_doc(model, &tokens, burn_in, samples, doc_seed)
        })
        .collect()
}

const META_KEYS: [&str; 4] = ["k", "v", "alpha", "beta"];

impl LdaModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut cp = Checkpoint::new();
        cp.set_meta("k", self.k);
        cp.set_meta("v", self.v);
        cp.set_meta("alpha", self.alpha);
        cp.set_meta("beta", self.beta);
        let data: Vec<f64> = self.phi.iter().flatten().copied().collect();
        cp.add_tensor("phi", Tensor::from_vec(&[self.k, self.v], data).unwrap());
        cp
    }

    /// Counts are not persisted; a loaded model carries phi only.
    pub fn from_checkpoint(cp: &Checkpoint) -> Result<LdaModel> {
        for key in META_KEYS {
            if cp.meta(key).is_none() {
                return Err(Error::Incompatible(format!("missing metadata key {key:?}")));
            }
        }
        let k: usize = cp.meta_parsed("k")?;
        let v: usize = cp.meta_parsed("v")?;
        let phi_t = cp.require_tensor("phi")?;
        if phi_t.dims() != [k, v] {
            return Err(Error::Incompatible(format!(
                "phi dims {:?} do not match k={k}, v={v}",
                phi_t.dims()
            )));
        }
        let phi: Vec<Vec<f64>> = (0..k)
            .map(|row| phi_t.data()[row * v..(row + 1) * v].to_vec())
            .collect();
        Ok(LdaModel {
            k,
            v,
            alpha: cp.meta_parsed("alpha")?,
            beta: cp.meta_parsed("beta")?,
            topic_word_counts: Vec::new(),
            topic_totals: Vec::new(),
            phi,
        })
    }
}
