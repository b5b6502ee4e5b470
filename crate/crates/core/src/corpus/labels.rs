//! Outcome labels and patient filtering.

use std::collections::{BTreeMap, HashSet};

use super::{Labels, PatientMeta};

pub const SECS_PER_DAY: i64 = 86_400;

/// in_hospital from the flag; 30-day and 1-year measured from discharge.
pub fn compute_labels(meta: &PatientMeta) -> Labels {
    let within = |days: i64| {
        meta.death_time
            .map(|d| d <= meta.discharge_time + days * SECS_PER_DAY)
            .unwrap_or(false)
    };
    Labels {
        in_hospital: meta.in_hospital_death,
        post_30d: within(30),
        post_1y: within(365),
    }
}

/// Age floor applies to every patient; the token floor applies only to ids
/// in `train_candidates` (short documents are fine to evaluate on, just not
/// to train on).
pub fn filter_patients(
    patients: &[PatientMeta],
    total_tokens: &BTreeMap<String, u64>,
    train_candidates: &HashSet<String>,
    min_age: f64,
    min_train_tokens: u64,
) -> Vec<PatientMeta> {
    patients
        .iter()
        .filter(|p| p.age_at_admission >= min_age)
        .filter(|p| {
            if train_candidates.contains(&p.patient_id) {
                total_tokens.get(&p.patient_id).copied().unwrap_or(0) >= min_train_tokens
            } else {
                true
            }
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(age: f64, death_days_after_discharge: Option<i64>, ihd: bool) -> PatientMeta {
        let discharge = 1_000_000;
        PatientMeta {
            patient_id: "p".into(),
            age_at_admission: age,
            admit_time: 0,
            discharge_time: discharge,
            death_time: death_days_after_discharge.map(|d| discharge + d * SECS_PER_DAY),
            in_hospital_death: ihd,
        }
    }

    #[test]
    fn no_death_no_labels() {
        let l = compute_labels(&meta(60.0, None, false));
        assert_eq!((l.in_hospital, l.post_30d, l.post_1y), (false, false, false));
    }

    #[test]
    fn death_ten_days_after_discharge() {
        let l = compute_labels(&meta(60.0, Some(10), false));
        assert_eq!((l.in_hospital, l.post_30d, l.post_1y), (false, true, true));
    }

    #[test]
    fn death_at_discharge_in_hospital() {
        let l = compute_labels(&meta(60.0, Some(0), true));
        assert_eq!((l.in_hospital, l.post_30d, l.post_1y), (true, true, true));
        assert!(l.monotone());
    }

    #[test]
    fn thirty_day_boundary_is_inclusive() {
        assert!(compute_labels(&meta(60.0, Some(30), false)).post_30d);
        let l31 = compute_labels(&meta(60.0, Some(31), false));
        assert!(!l31.post_30d && l31.post_1y);
    }

    #[test]
    fn age_boundary() {
        let patients = vec![meta(17.9, None, false), {
            let mut m = meta(18.0, None, false);
            m.patient_id = "adult".into();
            m
        }];
        let kept = filter_patients(
            &patients,
            &BTreeMap::new(),
            &HashSet::new(),
            18.0,
            100,
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].patient_id, "adult");
    }

    #[test]
    fn token_floor_only_hits_training_candidates() {
        let mut short_train = meta(50.0, None, false);
        short_train.patient_id = "t1".into();
        let mut short_test = meta(50.0, None, false);
        short_test.patient_id = "s1".into();
        let totals: BTreeMap<String, u64> =
            [("t1".to_string(), 99), ("s1".to_string(), 99)].into_iter().collect();
        let train: HashSet<String> = ["t1".to_string()].into_iter().collect();
        let kept = filter_patients(&[short_train, short_test], &totals, &train, 18.0, 100);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].patient_id, "s1");
    }
}
