//! Deterministic 6:2:2 split plus training-set negative downsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DatasetSplit;
use crate::{Error, Result};

/// Shuffles ids (sorted first, so input order is irrelevant) and cuts
/// 60/20/20. The remainder after the integer cuts lands in the test set.
pub fn split_patients(ids: &[String], seed: u64) -> Result<DatasetSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    split_with_rng(ids, &mut rng)
}

fn split_with_rng(ids: &[String], rng: &mut ChaCha8Rng) -> Result<DatasetSplit> {
    if ids.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "need at least 5 patients to split, got {}",
            ids.len()
        )));
    }
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    // Fisher-Yates with an explicit draw order keeps the shuffle reproducible.
    for i in (1..sorted.len()).rev() {
        let j = rng.gen_range(0..=i);
        sorted.swap(i, j);
    }
    let n = sorted.len();
    let n_train = n * 6 / 10;
    let n_val = n * 2 / 10;
    let mut it = sorted.into_iter();
    let train: Vec<String> = it.by_ref().take(n_train).collect();
    let validation: Vec<String> = it.by_ref().take(n_val).collect();
    let test: Vec<String> = it.collect();
    Ok(DatasetSplit {
        train,
        validation,
        test,
    })
}

/// Removes uniformly-random negatives until negatives/total <= 0.70 or no
/// negatives remain. Removal is minimal: one patient at a time.
pub fn downsample_negatives<F>(train: &[String], is_positive: F, seed: u64) -> Vec<String>
where
    F: Fn(&str) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    downsample_with_rng(train, is_positive, &mut rng)
}

fn downsample_with_rng<F>(train: &[String], is_positive: F, rng: &mut ChaCha8Rng) -> Vec<String>
where
    F: Fn(&str) -> bool,
{
    let mut kept: Vec<String> = train.to_vec();
    loop {
        let neg_idx: Vec<usize> = kept
            .iter()
            .enumerate()
            .filter(|(_, id)| !is_positive(id))
            .map(|(i, _)| i)
            .collect();
        // negatives/total <= 0.70 in exact integer arithmetic
        if neg_idx.is_empty() || 10 * neg_idx.len() <= 7 * kept.len() {
            return kept;
        }
        let victim = neg_idx[rng.gen_range(0..neg_idx.len())];
        kept.remove(victim);
    }
}

/// Split then downsample the training portion, all from one seeded stream.
/// `patients` carries the task label used for downsampling.
pub fn split_and_downsample(patients: &[(String, bool)], seed: u64) -> Result<DatasetSplit> {
    let ids: Vec<String> = patients.iter().map(|(id, _)| id.clone()).collect();
    let positive: std::collections::HashSet<&str> = patients
        .iter()
        .filter(|(_, y)| *y)
        .map(|(id, _)| id.as_str())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = split_with_rng(&ids, &mut rng)?;
    split.train = downsample_with_rng(&split.train, |id| positive.contains(id), &mut rng);
    Ok(split)
}
