use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use psyfeat::lda::load_model;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Copies the bundled fixture so that outputs land in a scratch directory.
fn scratch_fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture_dir(), dir.path());
    dir
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            if entry.file_name() != "out" {
                copy_dir(&entry.path(), &target);
            }
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn psyfeat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psyfeat"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn summary_line(out: &Output) -> serde_json::Value {
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "expected one summary line, got {stdout:?}");
    serde_json::from_str(lines[0]).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn experiment_on_fixture_succeeds() {
    let dir = scratch_fixture();
    let cfg = dir.path().join("fixture.toml");
    let out = psyfeat(&["experiment", "--config", p(&cfg)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary_line(&out);
    assert_eq!(s["command"], "experiment");
    assert_eq!(s["rows"], 9);
    for f in [
        "report.csv",
        "baselines.csv",
        "report_meta.json",
        "rmse_vs_k.csv",
    ] {
        assert!(dir.path().join("out").join(f).exists(), "{f} missing");
    }
}

#[test]
fn missing_score_file_names_the_path() {
    let dir = scratch_fixture();
    std::fs::remove_file(dir.path().join("scores.csv")).unwrap();
    let cfg = dir.path().join("fixture.toml");
    let out = psyfeat(&["experiment", "--config", p(&cfg)]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
    assert!(stderr.contains("scores.csv"), "{stderr}");
    assert!(out.stdout.is_empty());
}

#[test]
fn train_single_topic() {
    let dir = scratch_fixture();
    let model = dir.path().join("k1.json");
    let out = psyfeat(&[
        "topics",
        "train",
        "--messages",
        p(&dir.path().join("messages.jsonl")),
        "--k",
        "1",
        "--iterations",
        "5",
        "--seed",
        "3",
        "--out",
        p(&model),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(summary_line(&out)["k"], 1);
    let m = load_model(&model).unwrap();
    assert_eq!(m.num_topics(), 1);
    let phi = m.topic_word_distribution(0);
    assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn stage_by_stage_commands() {
    let dir = scratch_fixture();
    let d = dir.path();
    let corpus = d.join("stage/corpus.jsonl");
    let run = |args: &[&str]| {
        let out = psyfeat(args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        summary_line(&out)
    };
    let cfg = d.join("fixture.toml");
    let s = run(&["ingest", "--config", p(&cfg), "--out", p(&corpus)]);
    assert_eq!(s["users"], 60);

    let liwc = d.join("stage/liwc.csv");
    let s = run(&[
        "features",
        "liwc",
        "--config",
        p(&cfg),
        "--documents",
        p(&corpus),
        "--out",
        p(&liwc),
    ]);
    assert_eq!(s["categories"], 4);

    let model = d.join("stage/model.json");
    run(&[
        "topics",
        "train",
        "--documents",
        p(&corpus),
        "--k",
        "3",
        "--iterations",
        "40",
        "--out",
        p(&model),
    ]);
    let theta = d.join("stage/theta.csv");
    let s = run(&[
        "topics",
        "infer",
        "--documents",
        p(&corpus),
        "--model",
        p(&model),
        "--iterations",
        "20",
        "--burn-in",
        "5",
        "--out",
        p(&theta),
    ]);
    assert_eq!(s["documents"], 60);

    let eval = d.join("stage/eval.json");
    let s = run(&[
        "evaluate",
        "--features",
        p(&theta),
        "--scores",
        p(&d.join("scores.csv")),
        "--folds",
        "5",
        "--out",
        p(&eval),
    ]);
    assert!(s["mean_rmse"].as_f64().unwrap() > 0.0);
    assert!(eval.exists());

    run(&["experiment", "--config", p(&cfg), "--k-list", "2"]);
    let s = run(&[
        "report",
        "--report",
        p(&d.join("out/report.csv")),
        "--out",
        p(&d.join("figs")),
    ]);
    assert_eq!(s["rows"], 5);
    assert!(d.join("figs/rmse_vs_k.csv").exists());
}

#[test]
fn bad_config_key_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "seed = 1\nunknown_key = 2\n[corpus]\nmessages = \"m.jsonl\"\n",
    )
    .unwrap();
    let out = psyfeat(&["experiment", "--config", p(&cfg)]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "{stderr}");
    assert!(stderr.contains("unknown_key"), "{stderr}");
}

#[test]
fn synth_writes_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = psyfeat(&[
        "synth",
        "--out",
        p(dir.path()),
        "--users",
        "5",
        "--lexicon",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    assert_eq!(summary_line(&out)["users"], 5);
    for f in ["messages.jsonl", "scores.csv", "lexicon.dic"] {
        assert!(dir.path().join(f).exists());
    }
}
