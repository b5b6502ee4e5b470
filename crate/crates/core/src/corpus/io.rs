//! File formats: notes/metadata CSV inputs, corpus/vocab/splits outputs,
//! and the summary statistics file.
//!
//! corpus.tsv keeps raw integer counts (one line per patient and time
//! point); normalized weight vectors are recomputed on load. Counts are the
//! lossless representation and the topic model needs them to rebuild token
//! lists.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use super::{BowSequence, CorpusEntry, DatasetSplit, Labels, PatientMeta, RawNote, Vocab};
use crate::{Error, Result};

const SECS_PER_YEAR: f64 = 365.25 * 86_400.0;

/// Accepts RFC-3339, "YYYY-MM-DD HH:MM:SS" (read as UTC), or a bare date.
pub fn parse_timestamp(s: &str) -> Result<i64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Ok(dt.and_utc().timestamp());
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp());
    }
    Err(Error::Parse(format!("unrecognized timestamp {s:?}")))
}

fn check_headers(got: &csv::StringRecord, want: &[&str], what: &str) -> Result<()> {
    let got_vec: Vec<&str> = got.iter().collect();
    if got_vec != want {
        return Err(Error::Parse(format!(
            "{what}: expected header {want:?}, got {got_vec:?}"
        )));
    }
    Ok(())
}

/// Header: patient_id,chart_time,category,text (RFC-4180 quoting).
pub fn read_notes_csv(path: &Path) -> Result<Vec<RawNote>> {
    let mut rdr = csv::Reader::from_path(path)?;
    check_headers(rdr.headers()?, &["patient_id", "chart_time", "category", "text"], "notes csv")?;
    let mut notes = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != 4 {
            return Err(Error::Parse(format!("notes csv row {row}: expected 4 fields")));
        }
        let patient_id = rec[0].to_string();
        if patient_id.is_empty() {
            return Err(Error::Parse(format!("notes csv row {row}: empty patient_id")));
        }
        notes.push(RawNote {
            patient_id,
            chart_time: parse_timestamp(&rec[1])
                .map_err(|e| Error::Parse(format!("notes csv row {row}: {e}")))?,
            category: rec[2].to_string(),
            text: rec[3].to_string(),
        });
    }
    Ok(notes)
}

/// Header: patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death.
/// Age at admission is derived from the date of birth.
pub fn read_meta_csv(path: &Path) -> Result<Vec<PatientMeta>> {
    let mut rdr = csv::Reader::from_path(path)?;
    check_headers(
        rdr.headers()?,
        &["patient_id", "dob", "admit_time", "discharge_time", "death_time", "in_hospital_death"],
        "metadata csv",
    )?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let fail = |msg: String| Error::Parse(format!("metadata csv row {row}: {msg}"));
        if rec.len() != 6 {
            return Err(fail("expected 6 fields".into()));
        }
        let patient_id = rec[0].to_string();
        if !seen.insert(patient_id.clone()) {
            return Err(fail(format!("duplicate patient_id {patient_id}")));
        }
        let dob = parse_timestamp(&rec[1]).map_err(|e| fail(e.to_string()))?;
        let admit_time = parse_timestamp(&rec[2]).map_err(|e| fail(e.to_string()))?;
        let discharge_time = parse_timestamp(&rec[3]).map_err(|e| fail(e.to_string()))?;
        let death_time = if rec[4].trim().is_empty() {
            None
        } else {
            Some(parse_timestamp(&rec[4]).map_err(|e| fail(e.to_string()))?)
        };
        let in_hospital_death = match rec[5].trim().to_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(fail(format!("bad in_hospital_death {other:?}"))),
        };
        let meta = PatientMeta {
            patient_id,
            age_at_admission: (admit_time - dob) as f64 / SECS_PER_YEAR,
            admit_time,
            discharge_time,
            death_time,
            in_hospital_death,
        };
        meta.validate().map_err(|e| fail(e.to_string()))?;
        out.push(meta);
    }
    Ok(out)
}

/// One "id<TAB>word" line per word, ascending id.
pub fn write_vocab_tsv(path: &Path, vocab: &Vocab) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (i, word) in vocab.words().iter().enumerate() {
        writeln!(w, "{i}\t{word}")?;
    }
    Ok(())
}

pub fn read_vocab_tsv(path: &Path) -> Result<Vocab> {
    let content = fs::read_to_string(path)?;
    let mut words = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let (id, word) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse(format!("vocab line {}: missing tab", i + 1)))?;
        let id: usize = id
            .parse()
            .map_err(|_| Error::Parse(format!("vocab line {}: bad id {id:?}", i + 1)))?;
        if id != i {
            return Err(Error::Parse(format!(
                "vocab line {}: ids must ascend from 0, got {id}",
                i + 1
            )));
        }
        words.push(word.to_string());
    }
    let vocab = Vocab::from_words(words.clone());
    if vocab.words() != words.as_slice() {
        return Err(Error::Parse("vocab words are not in lexicographic order".into()));
    }
    Ok(vocab)
}

/// One line per (patient, time point):
/// patient_id<TAB>t<TAB>h,30,1y<TAB>word_id:count pairs (space-separated;
/// empty fourth field for empty time points).
pub fn write_corpus_tsv(path: &Path, entries: &[CorpusEntry]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for entry in entries {
        let id = &entry.seq.patient_id;
        if id.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidInput(format!("patient id {id:?} contains separators")));
        }
        let l = &entry.labels;
        let lab = format!(
            "{},{},{}",
            l.in_hospital as u8, l.post_30d as u8, l.post_1y as u8
        );
        for (idx, counts) in entry.seq.counts.iter().enumerate() {
            let pairs = counts
                .iter()
                .map(|(w, n)| format!("{w}:{n}"))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{id}\t{}\t{lab}\t{pairs}", idx + 1)?;
        }
    }
    Ok(())
}

fn parse_labels(s: &str, line_no: usize) -> Result<Labels> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("corpus line {line_no}: bad label field {s:?}")));
    }
    let bit = |p: &str| match p {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse(format!("corpus line {line_no}: bad label bit {other:?}"))),
    };
    let labels = Labels {
        in_hospital: bit(parts[0])?,
        post_30d: bit(parts[1])?,
        post_1y: bit(parts[2])?,
    };
    if !labels.monotone() {
        return Err(Error::Parse(format!("corpus line {line_no}: labels violate monotonicity")));
    }
    Ok(labels)
}

pub fn read_corpus_tsv(path: &Path) -> Result<Vec<CorpusEntry>> {
    let content = fs::read_to_string(path)?;
    let mut entries: Vec<CorpusEntry> = Vec::new();
    let mut finished: HashSet<String> = HashSet::new();
    let mut open: Option<CorpusEntry> = None;
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("corpus line {line_no}: expected 4 tab-separated fields")));
        }
        let (id, t_str, label_str, pairs_str) = (fields[0], fields[1], fields[2], fields[3]);
        let t: usize = t_str
            .parse()
            .map_err(|_| Error::Parse(format!("corpus line {line_no}: bad time point {t_str:?}")))?;
        let labels = parse_labels(label_str, line_no)?;
        let mut counts: Vec<(u32, u32)> = Vec::new();
        if !pairs_str.is_empty() {
            for pair in pairs_str.split(' ') {
                let (w, n) = pair.split_once(':').ok_or_else(|| {
                    Error::Parse(format!("corpus line {line_no}: bad pair {pair:?}"))
                })?;
                let w: u32 = w
                    .parse()
                    .map_err(|_| Error::Parse(format!("corpus line {line_no}: bad word id {w:?}")))?;
                let n: f64 = n
                    .parse()
                    .map_err(|_| Error::Parse(format!("corpus line {line_no}: bad count {n:?}")))?;
                if n < 0.0 || (n - n.round()).abs() > 1e-9 || n.round() > u32::MAX as f64 {
                    return Err(Error::Parse(format!(
                        "corpus line {line_no}: counts must be non-negative integers, got {n}"
                    )));
                }
                counts.push((w, n.round() as u32));
            }
            if counts.windows(2).any(|p| p[0].0 >= p[1].0) {
                return Err(Error::Parse(format!(
                    "corpus line {line_no}: word ids must be strictly ascending"
                )));
            }
        }
        let start_new = match &open {
            Some(entry) => entry.seq.patient_id != id,
            None => true,
        };
        if start_new {
            if let Some(done) = open.take() {
                finished.insert(done.seq.patient_id.clone());
                entries.push(done);
            }
            if finished.contains(id) {
                return Err(Error::Parse(format!(
                    "corpus line {line_no}: patient {id} appears in two separate blocks"
                )));
            }
            if t != 1 {
                return Err(Error::Parse(format!(
                    "corpus line {line_no}: patient {id} must start at time point 1"
                )));
            }
            open = Some(CorpusEntry {
                seq: BowSequence {
                    patient_id: id.to_string(),
                    counts: vec![counts],
                },
                labels,
            });
        } else {
            let entry = open.as_mut().unwrap();
            if t != entry.seq.counts.len() + 1 {
                return Err(Error::Parse(format!(
                    "corpus line {line_no}: time points must ascend without gaps"
                )));
            }
            if labels != entry.labels {
                return Err(Error::Parse(format!(
                    "corpus line {line_no}: labels differ within patient {id}"
                )));
            }
            entry.seq.counts.push(counts);
        }
    }
    if let Some(done) = open.take() {
        entries.push(done);
    }
    if entries.is_empty() {
        return Err(Error::EmptyInput("corpus file has no records".into()));
    }
    Ok(entries)
}

/// patient_id<TAB>train|validation|test, sorted by patient id.
pub fn write_splits_tsv(path: &Path, split: &DatasetSplit) -> Result<()> {
    let mut rows: Vec<(&str, &str)> = split
        .train
        .iter()
        .map(|id| (id.as_str(), "train"))
        .chain(split.validation.iter().map(|id| (id.as_str(), "validation")))
        .chain(split.test.iter().map(|id| (id.as_str(), "test")))
        .collect();
    rows.sort();
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (id, name) in rows {
        writeln!(w, "{id}\t{name}")?;
    }
    Ok(())
}

pub fn read_splits_tsv(path: &Path) -> Result<DatasetSplit> {
    let content = fs::read_to_string(path)?;
    let mut split = DatasetSplit::default();
    for (i, line) in content.lines().enumerate() {
        let (id, name) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse(format!("splits line {}: missing tab", i + 1)))?;
        match name {
            "train" => split.train.push(id.to_string()),
            "validation" => split.validation.push(id.to_string()),
            "test" => split.test.push(id.to_string()),
            other => {
                return Err(Error::Parse(format!("splits line {}: unknown split {other:?}", i + 1)))
            }
        }
    }
    if !split.is_disjoint() {
        return Err(Error::Parse("splits file assigns a patient twice".into()));
    }
    Ok(split)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub n_patients: usize,
    pub n_words: usize,
    pub seq_len_median: f64,
    pub seq_len_max: usize,
    pub doc_len_median: f64,
    pub doc_len_max: u64,
}

fn median_u64(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Sequence length = time points per patient; document length = token count
/// of one non-empty time point.
pub fn compute_stats(entries: &[CorpusEntry], n_words: usize) -> CorpusStats {
    let mut seq_lens: Vec<u64> = entries.iter().map(|e| e.seq.len() as u64).collect();
    seq_lens.sort_unstable();
    let mut doc_lens: Vec<u64> = entries
        .iter()
        .flat_map(|e| {
            e.seq
                .counts
                .iter()
                .filter(|c| !c.is_empty())
                .map(|c| c.iter().map(|&(_, n)| n as u64).sum::<u64>())
        })
        .collect();
    doc_lens.sort_unstable();
    CorpusStats {
        n_patients: entries.len(),
        n_words,
        seq_len_median: median_u64(&seq_lens),
        seq_len_max: seq_lens.last().copied().unwrap_or(0) as usize,
        doc_len_median: median_u64(&doc_lens),
        doc_len_max: doc_lens.last().copied().unwrap_or(0),
    }
}

pub fn write_stats_txt(path: &Path, stats: &CorpusStats) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# patients\t{}", stats.n_patients)?;
    writeln!(w, "# unique words\t{}", stats.n_words)?;
    writeln!(w, "Seq. len (median)\t{}", stats.seq_len_median)?;
    writeln!(w, "Seq. len (max)\t{}", stats.seq_len_max)?;
    writeln!(w, "Doc. len (median)\t{}", stats.doc_len_median)?;
    writeln!(w, "Doc. len (max)\t{}", stats.doc_len_max)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, counts: Vec<Vec<(u32, u32)>>, labels: (bool, bool, bool)) -> CorpusEntry {
        CorpusEntry {
            seq: BowSequence {
                patient_id: id.to_string(),
                counts,
            },
            labels: Labels {
                in_hospital: labels.0,
                post_30d: labels.1,
                post_1y: labels.2,
            },
        }
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("1970-01-01T00:00:00Z").unwrap(), 0);
        assert_eq!(parse_timestamp("1970-01-01 00:00:10").unwrap(), 10);
        assert_eq!(parse_timestamp("1970-01-02").unwrap(), 86_400);
        assert!(parse_timestamp("not a time").is_err());
    }

    #[test]
    fn notes_csv_round_trip_with_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("notes.csv");
        fs::write(
            &path,
            "patient_id,chart_time,category,text\n\
             p1,1970-01-01T01:00:00Z,nursing,\"line one\nwith, comma\"\n",
        )
        .unwrap();
        let notes = read_notes_csv(&path).unwrap();
        assert_eq!(notes.len(), 1);
        assert_eq!(notes[0].chart_time, 3600);
        assert!(notes[0].text.contains("with, comma"));
    }

    #[test]
    fn notes_csv_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("notes.csv");
        fs::write(&path, "pid,time,cat,text\n").unwrap();
        assert!(read_notes_csv(&path).is_err());
    }

    #[test]
    fn meta_csv_parses_and_computes_age() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.csv");
        fs::write(
            &path,
            "patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death\n\
             p1,1950-01-01,2000-01-01 00:00:00,2000-01-03 00:00:00,,0\n\
             p2,1990-06-15,2010-06-15 12:00:00,2010-06-20 12:00:00,2010-06-20 11:00:00,1\n",
        )
        .unwrap();
        let metas = read_meta_csv(&path).unwrap();
        assert_eq!(metas.len(), 2);
        assert!((metas[0].age_at_admission - 50.0).abs() < 0.1);
        assert!(metas[0].death_time.is_none());
        assert!(metas[1].in_hospital_death);
    }

    #[test]
    fn meta_csv_rejects_invariant_violations() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.csv");
        // discharge before admit
        fs::write(
            &path,
            "patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death\n\
             p1,1950-01-01,2000-01-05,2000-01-01,,0\n",
        )
        .unwrap();
        assert!(read_meta_csv(&path).is_err());
        // in-hospital death with no death_time
        fs::write(
            &path,
            "patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death\n\
             p1,1950-01-01,2000-01-01,2000-01-05,,1\n",
        )
        .unwrap();
        assert!(read_meta_csv(&path).is_err());
    }

    #[test]
    fn vocab_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        let vocab = Vocab::from_words(vec!["beta".into(), "alpha".into(), "gamma".into()]);
        write_vocab_tsv(&path, &vocab).unwrap();
        let loaded = read_vocab_tsv(&path).unwrap();
        assert_eq!(vocab, loaded);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "0\talpha\n1\tbeta\n2\tgamma\n");
    }

    #[test]
    fn corpus_tsv_round_trip_including_empty_time_points() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.tsv");
        let entries = vec![
            entry("p1", vec![vec![(0, 2), (3, 1)], vec![], vec![(2, 5)]], (true, true, true)),
            entry("p2", vec![vec![]], (false, false, true)),
        ];
        write_corpus_tsv(&path, &entries).unwrap();
        let loaded = read_corpus_tsv(&path).unwrap();
        assert_eq!(entries, loaded);
        // second write is byte-identical
        let bytes1 = fs::read(&path).unwrap();
        write_corpus_tsv(&path, &loaded).unwrap();
        assert_eq!(bytes1, fs::read(&path).unwrap());
    }

    #[test]
    fn corpus_tsv_rejects_malformed_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.tsv");
        // gap in time points
        fs::write(&path, "p1\t1\t0,0,0\t0:1\np1\t3\t0,0,0\t\n").unwrap();
        assert!(read_corpus_tsv(&path).is_err());
        // label flips within a patient
        fs::write(&path, "p1\t1\t0,0,0\t0:1\np1\t2\t0,0,1\t\n").unwrap();
        assert!(read_corpus_tsv(&path).is_err());
        // non-monotone labels
        fs::write(&path, "p1\t1\t1,0,0\t0:1\n").unwrap();
        assert!(read_corpus_tsv(&path).is_err());
        // fractional counts
        fs::write(&path, "p1\t1\t0,0,0\t0:0.5\n").unwrap();
        assert!(read_corpus_tsv(&path).is_err());
    }

    #[test]
    fn splits_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("splits.tsv");
        let split = DatasetSplit {
            train: vec!["p2".into(), "p1".into()],
            validation: vec!["p3".into()],
            test: vec!["p4".into()],
        };
        write_splits_tsv(&path, &split).unwrap();
        let loaded = read_splits_tsv(&path).unwrap();
        let mut train = loaded.train.clone();
        train.sort();
        assert_eq!(train, vec!["p1".to_string(), "p2".to_string()]);
        assert_eq!(loaded.validation, vec!["p3".to_string()]);
        assert_eq!(loaded.test, vec!["p4".to_string()]);
    }

    #[test]
    fn stats_medians_by_hand() {
        let entries = vec![
            entry("p1", vec![vec![(0, 4)], vec![]], (false, false, false)),
            entry("p2", vec![vec![(0, 2)], vec![(1, 6)], vec![(2, 10)]], (false, false, false)),
        ];
        let stats = compute_stats(&entries, 3);
        assert_eq!(stats.n_patients, 2);
        assert_eq!(stats.seq_len_median, 2.5);
        assert_eq!(stats.seq_len_max, 3);
        // doc lens: 4, 2, 6, 10 -> median 5
        assert_eq!(stats.doc_len_median, 5.0);
        assert_eq!(stats.doc_len_max, 10);
    }
}
