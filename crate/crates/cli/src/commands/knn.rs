//! `cliniseq knn`: neighborhood-overlap score for exported latents,
//! printed as one number. With --reference the overlap is between nearest-
//! neighbor sets in the two latent spaces (row index is document identity);
//! with --by-patient it is the fraction of neighbors from the same patient.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use cliniseq_core::eval::{knn_overlap_same_patient, knn_overlap_with_reference};
use cliniseq_core::{Error, Result};

use crate::config::{parse_value, unknown_key, KvFile};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Args)]
pub struct KnnArgs {
    /// Candidate latents TSV (from `cliniseq latents`)
    #[arg(long)]
    pub latents: PathBuf,
    /// Reference latents TSV with the same rows
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Score neighbors by shared patient id instead of a reference space
    #[arg(long)]
    pub by_patient: bool,
    /// Neighbors per document
    #[arg(long)]
    pub k: Option<usize>,
    /// key=value settings file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub struct LatentRows {
    pub patients: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn read_latents(path: &Path) -> Result<LatentRows> {
    let text = std::fs::read_to_string(path)?;
    let mut patients = Vec::new();
    let mut vectors = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 4 {
            return Err(Error::Parse(format!(
                "{}:{}: expected patient_id, t, label, and at least one value",
                path.display(),
                idx + 1
            )));
        }
        let vector: Vec<f64> = fields[3..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "{}:{}: bad latent value {f:?}",
                        path.display(),
                        idx + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if *dim.get_or_insert(vector.len()) != vector.len() {
            return Err(Error::Parse(format!(
                "{}:{}: inconsistent latent dimension",
                path.display(),
                idx + 1
            )));
        }
        patients.push(fields[0].to_string());
        vectors.push(vector);
    }
    Ok(LatentRows { patients, vectors })
}

struct Resolved {
    reference: Option<PathBuf>,
    by_patient: bool,
    k: usize,
}

fn resolve(args: &KnnArgs) -> Result<Resolved> {
    let kv = KvFile::load_optional(args.config.as_deref())?;
    let mut r = Resolved {
        reference: None,
        by_patient: false,
        k: DEFAULT_K,
    };
    for (key, value) in &kv.pairs {
        match key.as_str() {
            "reference" => r.reference = Some(PathBuf::from(value)),
            "by_patient" => r.by_patient = parse_value(key, value)?,
            "k" => r.k = parse_value(key, value)?,
            _ => return Err(unknown_key("knn", key)),
        }
    }
    if let Some(v) = &args.reference {
        r.reference = Some(v.clone());
    }
    r.by_patient = r.by_patient || args.by_patient;
    if let Some(v) = args.k {
        r.k = v;
    }
    Ok(r)
}

pub fn run(args: &KnnArgs) -> Result<()> {
    let r = resolve(args)?;
    let candidate = read_latents(&args.latents)?;
    let overlap = match (&r.reference, r.by_patient) {
        (Some(path), false) => {
            let reference = read_latents(path)?;
            knn_overlap_with_reference(&candidate.vectors, &reference.vectors, r.k)?
        }
        (None, true) => {
            let mut index: BTreeMap<&str, usize> = BTreeMap::new();
            for id in &candidate.patients {
                let next = index.len();
                index.entry(id).or_insert(next);
            }
            let patient_of_doc: Vec<usize> =
                candidate.patients.iter().map(|id| index[id.as_str()]).collect();
            knn_overlap_same_patient(&candidate.vectors, &patient_of_doc, r.k)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "pass exactly one of --reference or --by-patient".into(),
            ))
        }
    };
    println!("{overlap:.6}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latents_parse_and_reject_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.tsv");
        std::fs::write(&path, "p1\t1\t0\t0.5\t0.5\np1\t2\t0\t1.0\t0.0\n").unwrap();
        let rows = read_latents(&path).unwrap();
        assert_eq!(rows.patients, vec!["p1", "p1"]);
        assert_eq!(rows.vectors[1], vec![1.0, 0.0]);

        std::fs::write(&path, "p1\t1\t0\t0.5\np1\t2\t0\t1.0\t0.0\n").unwrap();
        assert!(read_latents(&path).is_err());
    }
}
