use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intentminer"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = run(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_corpus(dir: &Path) {
    ok(&["synth", "--out", "corpus.jsonl", "--n-yes", "90", "--n-no", "60", "--seed", "5"], dir);
}

#[test]
fn pipeline_writes_reports_and_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    fs::write(
        d.join("one.json"),
        r#"{"corpus_path": "corpus.jsonl", "output_dir": "from-file", "cv_k": 5, "final_spec": {"kind": "nb"}}"#,
    )
    .unwrap();
    ok(&["pipeline", "--config", "one.json", "--output-dir", "run", "--seed", "3"], d);
    assert!(!d.join("from-file").exists());
    for f in ["ig_report.csv", "eval.json", "eval.csv", "manifest.json"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["features"]["ig_selected"], 11);

    let eval_csv = fs::read_to_string(d.join("run/eval.csv")).unwrap();
    assert!(eval_csv.starts_with("classifier,feature_selection,recall,precision,f_measure,accuracy\nnb,ig,"));

    // The manifest replays to byte-identical reports.
    ok(&["pipeline", "--config", "run/manifest.json", "--output-dir", "replay"], d);
    for f in ["ig_report.csv", "eval.json", "eval.csv"] {
        assert_eq!(fs::read(d.join("run").join(f)).unwrap(), fs::read(d.join("replay").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn scheme_two_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    fs::write(
        d.join("two.json"),
        r#"{"corpus_path": "corpus.jsonl", "output_dir": "out", "cv_k": 5, "scheme": "two",
            "wrapper_spec": {"kind": "nb"}, "final_spec": {"kind": "dt"}, "ffs_budget": 4}"#,
    )
    .unwrap();
    ok(&["pipeline", "--config", "two.json"], d);
    let trace = fs::read_to_string(d.join("out/selection_trace.csv")).unwrap();
    assert!(trace.starts_with("step,added_term,subset_size,loocv_accuracy\n"));
    assert_eq!(trace.lines().count(), 5);
}

#[test]
fn missing_corpus_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.json"), r#"{"corpus_path": "nope.jsonl", "output_dir": "out"}"#).unwrap();
    let out = run(&["pipeline", "--config", "c.json"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus_path"));
    assert!(!d.join("out").exists());
}

#[test]
fn stage_subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    fs::write(d.join("raw.csv"), "id,text,lang\na,I want a new phone,en\nb,watched the game,en\nc,bonjour,fr\n").unwrap();
    ok(&["ingest", "--input", "raw.csv", "--out", "raw.jsonl", "--lang", "en", "--relabel"], d);
    let ingested = fs::read_to_string(d.join("raw.jsonl")).unwrap();
    assert_eq!(ingested.lines().count(), 2);
    assert!(ingested.lines().next().unwrap().contains(r#""label":"Yes""#));

    ok(&["preprocess", "--input", "corpus.jsonl", "--out", "pre.jsonl"], d);
    ok(&["select", "--input", "pre.jsonl", "--output-dir", "sel", "--wrapper", "nb", "--budget", "3"], d);
    for f in ["vocabulary.txt", "matrix.txt", "ig_report.csv", "subset.json", "selection_trace.csv"] {
        assert!(d.join("sel").join(f).exists(), "{f}");
    }
    let features = ["--input", "pre.jsonl", "--vocab", "sel/vocabulary.txt", "--subset", "sel/subset.json"];
    ok(&[&["train"], &features[..], &["--classifier", "dt", "--out", "model.json"]].concat(), d);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["format_version"], 1);
    assert_eq!(model["kind"], "dt");

    let scored = ok(&[&["evaluate"], &features[..], &["--model", "model.json"]].concat(), d);
    let m: serde_json::Value = serde_json::from_slice(&scored.stdout).unwrap();
    assert_eq!(m["tp"].as_u64().unwrap() + m["fp"].as_u64().unwrap() + m["fn"].as_u64().unwrap() + m["tn"].as_u64().unwrap(), 150);

    ok(&[&["evaluate"], &features[..], &["--classifier", "nb", "--k", "5", "--out", "cv.json"]].concat(), d);
    let cv: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("cv.json")).unwrap()).unwrap();
    assert_eq!(cv["folds"].as_array().unwrap().len(), 5);
}

#[test]
fn matrix_grid_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    fs::write(d.join("base.json"), r#"{"corpus_path": "corpus.jsonl", "cv_k": 3, "ffs_budget": 3}"#).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_intentminer"));
    let out = cmd
        .args(["matrix", "--config-dir", "grid", "--output-dir", "out", "--write-grid", "base.json"])
        .env("INTENTMINER_THREADS", "2")
        .current_dir(d)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(d.join("out/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 25);
    assert!(lines[1].starts_with("dt,all-features,"));
    assert!(lines[24].starts_with("ann,ig+dt,"));
}

#[test]
fn empty_matrix_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("grid")).unwrap();
    let out = run(&["matrix", "--config-dir", "grid", "--output-dir", "out"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn bad_thread_count_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_intentminer"))
        .args(["synth", "--out", "x.jsonl"])
        .env("INTENTMINER_THREADS", "many")
        .current_dir(tempfile::tempdir().unwrap().path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("INTENTMINER_THREADS"));
}
