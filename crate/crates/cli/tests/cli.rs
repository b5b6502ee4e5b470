//! End-to-end exercises of the command-line interface: exit codes, config
//! merging, checkpoint metadata, and binary-level behavior.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use cliniseq_cli::run_args;
use cliniseq_core::checkpoint::Checkpoint;
use cliniseq_core::corpus::{
    write_corpus_tsv, write_splits_tsv, write_vocab_tsv, BowSequence, CorpusEntry, DatasetSplit,
    Labels, Vocab,
};
use cliniseq_core::models::{JointModelParams, ModelKind};
use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["cliniseq"];
    full.extend_from_slice(args);
    run_args(full)
}

fn synth_dir(dir: &Path, seed: u64) {
    let code = run(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--patients",
        "30",
        "--vocab-size",
        "30",
        "--topics",
        "3",
        "--risk-topics",
        "1",
        "--mean-seq-len",
        "4",
        "--doc-len",
        "12",
        "--seed",
        &seed.to_string(),
    ]);
    assert_eq!(code, 0, "synth failed");
}

#[test]
fn help_version_and_bad_flags() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["--version"]), 0);
    assert_eq!(run(&["train", "--help"]), 0);
    assert_eq!(run(&["no-such-command"]), 2);
    assert_eq!(run(&["synth", "--no-such-flag"]), 2);
}

#[test]
fn train_requires_model() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_dir(&corpus, 1);
    let out = tmp.path().join("run");
    let code = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn config_file_merges_under_flags() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_dir(&corpus, 2);

    let cfg = tmp.path().join("train.cfg");
    fs::write(&cfg, "steps = 4\nk = 6\nh = 5\n# comment\n\n").unwrap();
    let out = tmp.path().join("run");
    let code = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        "lstm_e",
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "2",
        "--seed",
        "7",
    ]);
    assert_eq!(code, 0);

    let cp = Checkpoint::load(&out.join("model.clnt")).unwrap();
    assert_eq!(cp.meta("steps"), Some("2"), "flag must override config file");
    assert_eq!(cp.meta("model"), Some("lstm_e"));
    let params = JointModelParams::from_checkpoint(&cp).unwrap();
    assert_eq!(params.k, 6, "k comes from the config file");
    assert_eq!(params.h, 5, "h comes from the config file");

    // The trained checkpoint also feeds the topic-report command.
    let topics_out = tmp.path().join("topics.txt");
    let code = run(&[
        "topics",
        "--model",
        out.join("model.clnt").to_str().unwrap(),
        "--vocab",
        corpus.to_str().unwrap(),
        "--source",
        "encoder",
        "--n",
        "3",
        "--out",
        topics_out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&topics_out).unwrap();
    assert!(text.starts_with("T0: "), "got {text:?}");
    assert_eq!(text.lines().count(), 6);

    let code = run(&[
        "topics",
        "--model",
        out.join("model.clnt").to_str().unwrap(),
        "--vocab",
        corpus.to_str().unwrap(),
        "--source",
        "nonsense",
        "--out",
        topics_out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_dir(&corpus, 3);
    let cfg = tmp.path().join("train.cfg");
    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let code = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        tmp.path().join("run").to_str().unwrap(),
        "--model",
        "lstm_e",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn zero_steps_checkpoint_matches_fresh_init() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_dir(&corpus, 4);
    let out = tmp.path().join("run");
    let code = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        "lstm_ed",
        "--k",
        "4",
        "--h",
        "3",
        "--steps",
        "0",
        "--seed",
        "9",
    ]);
    assert_eq!(code, 0);

    let cp = Checkpoint::load(&out.join("model.clnt")).unwrap();
    assert_eq!(cp.meta("best_step"), Some("0"));
    let loaded = JointModelParams::from_checkpoint(&cp).unwrap();
    let fresh = JointModelParams::init(ModelKind::LstmED, 4, 3, 30, 9).unwrap();
    let expect: Vec<f64> = fresh.flatten().iter().map(|&x| x as f32 as f64).collect();
    assert_eq!(loaded.flatten(), expect, "untrained checkpoint must equal the seeded init");
}

#[test]
fn default_hyperparameters_recorded_in_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_dir(&corpus, 5);
    let out = tmp.path().join("run");
    let code = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        "lstm_ed",
        "--steps",
        "1",
    ]);
    assert_eq!(code, 0);

    let cp = Checkpoint::load(&out.join("model.clnt")).unwrap();
    let num = |key: &str| cp.meta_parsed::<f64>(key).unwrap();
    assert_eq!(num("lr"), 0.001);
    assert_eq!(num("batch_size"), 10.0);
    assert_eq!(num("lambda1"), 0.01);
    assert_eq!(num("lambda2"), 0.0);
    assert_eq!(num("lambda3"), 1.0);
    assert_eq!(num("cfn"), 1.0);
    assert_eq!(num("val_interval"), 500.0);
    assert_eq!(num("log_interval"), 100.0);
    assert_eq!(num("seed"), 0.0);
    let params = JointModelParams::from_checkpoint(&cp).unwrap();
    assert_eq!(params.k, 50);
    assert_eq!(params.h, 128);

    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("step,train_loss,val_auc\n"));
}

fn one_point_entry(id: &str, positive: bool, words: &[(u32, u32)]) -> CorpusEntry {
    CorpusEntry {
        seq: BowSequence {
            patient_id: id.to_string(),
            counts: vec![words.to_vec()],
        },
        labels: Labels {
            in_hospital: positive,
            post_30d: positive,
            post_1y: positive,
        },
    }
}

#[test]
fn single_time_point_corpus_evaluates_one_row() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    fs::create_dir_all(&corpus).unwrap();

    let words: Vec<String> = ["alpha", "bravo", "carol", "delta", "elbow", "fjord"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let vocab = Vocab::from_words(words);
    let mut entries = Vec::new();
    for i in 0..10 {
        let positive = i % 3 == 0;
        let w = if positive { vec![(0u32, 3u32), (1, 1)] } else { vec![(3u32, 2u32), (5, 2)] };
        entries.push(one_point_entry(&format!("p{i:02}"), positive, &w));
    }
    let split = DatasetSplit {
        train: (0..6).map(|i| format!("p{i:02}")).collect(),
        validation: vec!["p06".into(), "p07".into()],
        test: vec!["p08".into(), "p09".into()],
    };
    write_corpus_tsv(&corpus.join("corpus.tsv"), &entries).unwrap();
    write_vocab_tsv(&corpus.join("vocab.tsv"), &vocab).unwrap();
    write_splits_tsv(&corpus.join("splits.tsv"), &split).unwrap();

    let out = tmp.path().join("run");
    let code = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        "lstm_e",
        "--k",
        "3",
        "--h",
        "3",
        "--steps",
        "5",
    ]);
    assert_eq!(code, 0);

    let auc_path = tmp.path().join("auc.csv");
    let code = run(&[
        "eval",
        "--model",
        out.join("model.clnt").to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        auc_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&auc_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one time point, got {text:?}");
    assert_eq!(lines[0], "task,model,t,n_pos,n_neg,auc");
    assert!(lines[1].starts_with("hospital,lstm_e,1,1,1,"), "got {:?}", lines[1]);
}

#[test]
fn eval_rejects_vocab_mismatch() {
    let tmp = TempDir::new().unwrap();
    let corpus_a = tmp.path().join("a");
    let corpus_b = tmp.path().join("b");
    synth_dir(&corpus_a, 6);
    let code = run(&[
        "synth",
        "--out",
        corpus_b.to_str().unwrap(),
        "--patients",
        "30",
        "--vocab-size",
        "40",
        "--topics",
        "4",
        "--seed",
        "6",
    ]);
    assert_eq!(code, 0);

    let out = tmp.path().join("run");
    let code = run(&[
        "train",
        "--corpus",
        corpus_a.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        "lstm_e",
        "--k",
        "3",
        "--h",
        "3",
        "--steps",
        "2",
    ]);
    assert_eq!(code, 0);

    let code = run(&[
        "eval",
        "--model",
        out.join("model.clnt").to_str().unwrap(),
        "--corpus",
        corpus_b.to_str().unwrap(),
        "--out",
        tmp.path().join("auc.csv").to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "evaluating against a foreign vocabulary must fail as incompatible");
}

#[test]
fn eval_rejects_non_finite_model() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    synth_dir(&corpus, 7);

    let mut params = JointModelParams::init(ModelKind::LstmE, 4, 3, 30, 1).unwrap();
    params.output.w.data_mut()[0] = f64::NAN;
    let mut cp = params.to_checkpoint();
    cp.set_meta("model", "lstm_e");
    cp.set_meta("task", "hospital");
    let path = tmp.path().join("poisoned.clnt");
    cp.save(&path).unwrap();

    let code = run(&[
        "eval",
        "--model",
        path.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        tmp.path().join("auc.csv").to_str().unwrap(),
    ]);
    assert_eq!(code, 4, "non-finite scores must surface as a numeric error");
}

#[test]
fn preprocess_input_errors() {
    let tmp = TempDir::new().unwrap();
    let notes = tmp.path().join("notes.csv");
    let meta = tmp.path().join("meta.csv");
    fs::write(&notes, "patient_id,chart_time,category,text\n").unwrap();
    fs::write(
        &meta,
        "patient_id,dob,admit_time,discharge_time,death_time,in_hospital_death\n",
    )
    .unwrap();
    let code = run(&[
        "preprocess",
        "--notes",
        notes.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
        "--out",
        tmp.path().join("corpus").to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "a notes file without rows is an input error");

    // Raw synthetic notes with an impossible age floor: every admission is
    // filtered out, which is an input error rather than an empty corpus.
    let raw = tmp.path().join("raw");
    let code = run(&[
        "synth",
        "--out",
        raw.to_str().unwrap(),
        "--patients",
        "20",
        "--vocab-size",
        "30",
        "--topics",
        "3",
        "--seed",
        "8",
        "--raw",
    ]);
    assert_eq!(code, 0);
    let code = run(&[
        "preprocess",
        "--notes",
        raw.join("notes.csv").to_str().unwrap(),
        "--meta",
        raw.join("meta.csv").to_str().unwrap(),
        "--out",
        tmp.path().join("corpus2").to_str().unwrap(),
        "--min-age",
        "200",
    ]);
    assert_eq!(code, 2);
}

fn write_latents_fixture(path: &Path) {
    let mut rows = String::new();
    for i in 0..12 {
        let a = (i as f64) * 0.25;
        let b = ((i * 7) % 5) as f64 - 2.0;
        let c = if i % 2 == 0 { 1.0 } else { -1.0 };
        rows.push_str(&format!(
            "p{i:02}\t1\t{}\t{a:.6}\t{b:.6}\t{c:.6}\n",
            u8::from(i % 3 == 0)
        ));
    }
    fs::write(path, rows).unwrap();
}

fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_cliniseq"))
}

#[test]
fn knn_binary_identity_overlap() {
    let tmp = TempDir::new().unwrap();
    let latents = tmp.path().join("latents.tsv");
    write_latents_fixture(&latents);

    let output = Command::new(binary())
        .args([
            "knn",
            "--latents",
            latents.to_str().unwrap(),
            "--reference",
            latents.to_str().unwrap(),
            "--k",
            "3",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.trim(), "1.000000", "a space compared against itself overlaps fully");
}

#[test]
fn thread_count_env_is_validated() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let bad = Command::new(binary())
        .env("CLINISEQ_THREADS", "0")
        .args(["synth", "--out", out.to_str().unwrap(), "--patients", "10"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("CLINISEQ_THREADS"), "stderr: {stderr}");

    let good = Command::new(binary())
        .env("CLINISEQ_THREADS", "2")
        .args(["synth", "--out", out.to_str().unwrap(), "--patients", "10"])
        .output()
        .unwrap();
    assert_eq!(good.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&good.stderr));
}
