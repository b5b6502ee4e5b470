//! Bucketing of tokenized notes into fixed 12-hour time points.

use std::collections::BTreeMap;

use super::{BowSequence, PatientMeta, Vocab};
use crate::{Error, Result};

pub const TIME_BUCKET_SECS: i64 = 12 * 3600;

/// Per-time-point token counts for one patient, still keyed by word string
/// (the vocabulary is built from these counts, then applied).
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBuckets {
    pub patient_id: String,
    /// Index 0 is time point 1.
    pub buckets: Vec<BTreeMap<String, u32>>,
}

impl TokenBuckets {
    pub fn total_tokens(&self) -> u64 {
        self.buckets
            .iter()
            .flat_map(|b| b.values().map(|&n| n as u64))
            .sum()
    }
}

/// Assigns each tokenized note to time point floor((chart - admit)/12h) + 1.
/// Pre-admission notes fold into time point 1; notes after discharge are
/// dropped; a note exactly at discharge lands in the last time point.
/// T = max(1, ceil(stay/12h)).
pub fn segment_time_points(
    notes: &[(i64, Vec<String>)],
    meta: &PatientMeta,
) -> Result<TokenBuckets> {
    let stay = meta.discharge_time - meta.admit_time;
    let t_max = ((stay + TIME_BUCKET_SECS - 1) / TIME_BUCKET_SECS).max(1) as usize;
    let mut buckets = vec![BTreeMap::new(); t_max];
    let mut kept_any = false;
    for (chart_time, tokens) in notes {
        if *chart_time > meta.discharge_time {
            continue;
        }
        kept_any = true;
        let offset = chart_time - meta.admit_time;
        let raw_t = if offset < 0 {
            1
        } else {
            (offset / TIME_BUCKET_SECS) as usize + 1
        };
        let t = raw_t.clamp(1, t_max);
        let bucket = &mut buckets[t - 1];
        for tok in tokens {
            *bucket.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    if !kept_any {
        return Err(Error::EmptyInput(format!(
            "patient {}: no notes inside the stay",
            meta.patient_id
        )));
    }
    Ok(TokenBuckets {
        patient_id: meta.patient_id.clone(),
        buckets,
    })
}

/// Restricts bucket counts to the vocabulary and switches to word ids.
pub fn to_bow_sequence(buckets: &TokenBuckets, vocab: &Vocab) -> BowSequence {
    let counts = buckets
        .buckets
        .iter()
        .map(|b| {
            let mut v: Vec<(u32, u32)> = b
                .iter()
                .filter_map(|(w, &n)| vocab.id(w).map(|id| (id, n)))
                .collect();
            v.sort_by_key(|&(id, _)| id);
            v
        })
        .collect();
    BowSequence {
        patient_id: buckets.patient_id.clone(),
        counts,
    }
}
