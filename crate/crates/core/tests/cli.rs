//! Drives the compiled binary end to end through temp directories.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tagbp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn tagbp")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "tagbp {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        !out.status.success(),
        "tagbp {args:?} unexpectedly succeeded"
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(name: &str) -> Self {
        let path = std::env::temp_dir().join(format!("tagbp-cli-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&path);
        std::fs::create_dir_all(&path).unwrap();
        Self(path)
    }

    fn join(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    fn str(&self, name: &str) -> String {
        self.join(name).to_string_lossy().into_owned()
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn synth(dir: &Path, extra: &[&str]) {
    let data = dir.to_string_lossy().into_owned();
    let mut args = vec![
        "synth",
        "--out",
        &data,
        "--nodes",
        "300",
        "--classes",
        "3",
        "--homophily",
        "0.8",
        "--mean-degree",
        "6",
        "--dim",
        "16",
        "--noise",
        "0.6",
        "--seed",
        "7",
    ];
    args.extend_from_slice(extra);
    run_ok(&args);
}

#[test]
fn synth_writes_a_complete_dataset_directory() {
    let tmp = TempDir::new("synth");
    let data = tmp.join("data");
    synth(&data, &[]);
    for name in [
        "meta.toml",
        "graph.edges",
        "labels.txt",
        "texts.jsonl",
        "embeddings.bin",
        "anchors.bin",
        "anchors.json",
    ] {
        assert!(data.join(name).exists(), "missing {name}");
    }
    let meta = std::fs::read_to_string(data.join("meta.toml")).unwrap();
    assert!(meta.contains("node_count = 300"));
    assert!(meta.contains("class_count = 3"));
}

#[test]
fn infer_writes_predictions_and_reports_accuracy() {
    let tmp = TempDir::new("infer");
    let data = tmp.join("data");
    synth(&data, &[]);
    let pred_path = tmp.str("pred.txt");
    let stdout = run_ok(&[
        "infer",
        "--data",
        &tmp.str("data"),
        "--method",
        "bp",
        "--ratio",
        "exact",
        "--out",
        &pred_path,
    ]);
    assert!(stdout.contains("homophily ratio used:"));
    assert!(stdout.contains("accuracy"));

    let pred = std::fs::read_to_string(&pred_path).unwrap();
    let rows: Vec<&str> = pred.lines().collect();
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().all(|r| matches!(*r, "0" | "1" | "2")));

    // The aggregate method goes by its short name, with the long form
    // kept as an alias.
    for method in ["na", "aggregate"] {
        let out = run_ok(&["infer", "--data", &tmp.str("data"), "--method", method]);
        assert_eq!(out.lines().count(), 300 + 1, "{method} output");
    }
}

#[test]
fn eval_is_reproducible_across_processes() {
    let tmp = TempDir::new("eval");
    let data = tmp.join("data");
    synth(&data, &[]);
    let args = [
        "eval",
        "--data",
        &tmp.str("data"),
        "--method",
        "bp",
        "--ratio",
        "exact",
        "--seeds",
        "42:45",
    ];
    let first = run_ok(&args);
    assert!(first.contains("accuracy: mean"));
    assert_eq!(first.lines().filter(|l| l.starts_with("seed ")).count(), 3);
    let second = run_ok(&args);
    assert_eq!(first, second);

    let csv_path = tmp.str("report.csv");
    let json_path = tmp.str("report.json");
    let mut with_files = args.to_vec();
    with_files.extend_from_slice(&["--csv", &csv_path, "--json", &json_path]);
    run_ok(&with_files);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(
        csv.lines().count(),
        1 + 3 + 2,
        "header, one row per seed, mean and std"
    );
    assert!(csv.lines().next().unwrap().contains("seed"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["per_seed"].as_array().unwrap().len(), 3);
    assert!(report["accuracy_mean"].as_f64().unwrap() > 0.3);
}

#[test]
fn estimate_r_with_the_oracle_matches_the_census() {
    let tmp = TempDir::new("estimate");
    let data = tmp.join("data");
    synth(&data, &[]);
    let audit_path = tmp.str("audit.json");
    let stdout = run_ok(&[
        "estimate-r",
        "--data",
        &tmp.str("data"),
        "--provider",
        "oracle",
        "--sample",
        "150",
        "--trials",
        "1",
        "--seed",
        "42",
        "--audit",
        &audit_path,
    ]);
    assert!(stdout.contains("estimated homophily ratio:"));
    assert!(stdout.contains("exact ratio from labels:"));

    let audit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&audit_path).unwrap()).unwrap();
    assert_eq!(audit["decided_pairs"].as_u64().unwrap(), 150);
    assert_eq!(audit["abstained_pairs"].as_u64().unwrap(), 0);
    assert_eq!(audit["pairs"].as_array().unwrap().len(), 150);
    let r = audit["r"].as_f64().unwrap();
    // Oracle answers are exact, so the estimate is the sampled edge
    // fraction around the 0.8 target.
    assert!((r - 0.8).abs() < 0.15, "r = {r}");
}

#[test]
fn scripted_mock_provider_answers_pair_prompts() {
    let tmp = TempDir::new("mock");
    let data = tmp.join("data");
    synth(&data, &[]);
    let fixture_path = tmp.join("responses.json");
    std::fs::write(&fixture_path, r#"{"default": "yes"}"#).unwrap();
    let provider = format!("mock={}", fixture_path.display());
    let stdout = run_ok(&[
        "estimate-r",
        "--data",
        &tmp.str("data"),
        "--provider",
        &provider,
        "--sample",
        "20",
        "--trials",
        "1",
    ]);
    // Every pair answered "yes" pushes the estimate to 1.
    assert!(
        stdout.contains("estimated homophily ratio: 1.0000"),
        "{stdout}"
    );
}

#[test]
fn config_file_feeds_defaults_and_flags_override_it() {
    let tmp = TempDir::new("config");
    let data = tmp.join("data");
    synth(&data, &[]);
    let config_path = tmp.join("pipeline.toml");
    std::fs::write(&config_path, "[ratio]\nsample_size = 10\ntrials = 1\n").unwrap();
    let config = config_path.to_string_lossy().into_owned();

    let from_file = run_ok(&[
        "estimate-r",
        "--config",
        &config,
        "--data",
        &tmp.str("data"),
        "--provider",
        "oracle",
    ]);
    assert!(from_file.contains("(10 pairs sampled"), "{from_file}");

    let from_flag = run_ok(&[
        "estimate-r",
        "--config",
        &config,
        "--data",
        &tmp.str("data"),
        "--provider",
        "oracle",
        "--sample",
        "25",
    ]);
    assert!(from_flag.contains("(25 pairs sampled"), "{from_flag}");
}

#[test]
fn linkpred_reports_auc_per_seed() {
    let tmp = TempDir::new("linkpred");
    let data = tmp.join("data");
    synth(&data, &[]);
    let json_path = tmp.str("lp.json");
    let stdout = run_ok(&[
        "linkpred",
        "--data",
        &tmp.str("data"),
        "--holdout",
        "50",
        "--seeds",
        "42:44",
        "--json",
        &json_path,
    ]);
    assert!(stdout.contains("AUC over 50 held-out edges"));

    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let rows = results.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let auc = row["auc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&auc));
        assert_eq!(row["held_out"].as_u64().unwrap(), 50);
    }
}

#[test]
fn ingest_normalizes_raw_files() {
    let tmp = TempDir::new("ingest");
    let edges_path = tmp.join("raw.edges");
    std::fs::write(&edges_path, "# toy graph\n0 1\n1 2\n2 0\n2 0\n1 1\n").unwrap();
    let meta_path = tmp.join("meta.toml");
    std::fs::write(
        &meta_path,
        concat!(
            "node_count = 3\n",
            "class_count = 2\n",
            "class_names = [\"alpha\", \"beta\"]\n",
            "task_description = \"tiny snippets\"\n",
        ),
    )
    .unwrap();
    let labels_path = tmp.join("labels.txt");
    std::fs::write(&labels_path, "0\n0\n1\n").unwrap();
    let texts_path = tmp.join("texts.jsonl");
    std::fs::write(&texts_path, "\"one\"\n\"two\"\n\"three\"\n").unwrap();

    let out = tmp.join("dataset");
    let stdout = run_ok(&[
        "ingest",
        "--edges",
        &edges_path.to_string_lossy(),
        "--meta",
        &meta_path.to_string_lossy(),
        "--labels",
        &labels_path.to_string_lossy(),
        "--texts",
        &texts_path.to_string_lossy(),
        "--out",
        &out.to_string_lossy(),
    ]);
    assert!(
        stdout.contains("3 edges kept, 1 self-loops dropped, 1 duplicates dropped"),
        "{stdout}"
    );
    assert!(out.join("graph.edges").exists());
    assert!(out.join("labels.txt").exists());

    // The normalized directory is immediately usable.
    let estimate = run_ok(&[
        "estimate-r",
        "--data",
        &out.to_string_lossy(),
        "--provider",
        "oracle",
        "--sample",
        "3",
        "--trials",
        "1",
    ]);
    assert!(estimate.contains("estimated homophily ratio:"));
}

#[test]
fn bad_arguments_fail_with_useful_errors() {
    let tmp = TempDir::new("errors");

    let stderr = run_err(&["infer", "--data", &tmp.str("missing")]);
    assert!(stderr.contains("loading dataset"), "{stderr}");

    let stderr = run_err(&["synth", "--out", &tmp.str("bad"), "--homophily", "1.5"]);
    assert!(stderr.contains("target_r"), "{stderr}");

    let data = tmp.join("data");
    synth(&data, &[]);
    let stderr = run_err(&[
        "estimate-r",
        "--data",
        &tmp.str("data"),
        "--provider",
        "oracle",
        "--trials",
        "2",
    ]);
    assert!(stderr.contains("odd"), "{stderr}");

    let stderr = run_err(&["eval", "--data", &tmp.str("data"), "--method", "nonsense"]);
    assert!(stderr.contains("method"), "{stderr}");

    let stderr = run_err(&[
        "eval",
        "--data",
        &tmp.str("data"),
        "--ratio",
        "exact",
        "--seeds",
        "42:42",
    ]);
    assert!(stderr.contains("seed"), "{stderr}");
}
