use std::path::Path;

use psyfeat::pipeline::synth::{generate, synthetic_lexicon, SynthConfig};
use psyfeat::pipeline::{read_report_csv, run_experiment, ExperimentConfig, FeatureSet};
use psyfeat::Error;

fn write_synth(dir: &Path, users: usize, seed: u64) {
    let corpus = generate(&SynthConfig {
        users,
        topics: 3,
        words_per_topic: 16,
        tokens_per_user: 80,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    corpus.write(dir).unwrap();
    std::fs::write(dir.join("lexicon.dic"), synthetic_lexicon(3)).unwrap();
}

fn config(dir: &Path, body: &str) -> ExperimentConfig {
    let text = format!(
        r#"
seed = 5
[corpus]
messages = "messages.jsonl"
scores = "scores.csv"
min_bytes = 0
[lexicon]
path = "lexicon.dic"
[lda]
iterations = 50
infer_iterations = 20
infer_burn_in = 5
{body}
"#
    );
    ExperimentConfig::from_toml_str(&text, dir).unwrap()
}

#[test]
fn liwc_only_grid_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), 40, 1);
    let cfg = config(
        dir.path(),
        "[evaluation]\nfeature_sets = [\"liwc\"]\ncv_folds = 4",
    );
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].k, None);
    assert!(report.rows[0].mean_rmse >= 0.0);
    assert_eq!(
        read_report_csv(&cfg.output_dir.join("report.csv")).unwrap(),
        report.rows
    );
}

#[test]
fn grid_covers_sets_times_k() {
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), 40, 2);
    std::fs::create_dir(dir.path().join("pre")).unwrap();
    write_synth(&dir.path().join("pre"), 50, 3);
    let cfg = config(
        dir.path(),
        "k_list = [2, 4]\n[pretrain]\nmessages = \"pre/messages.jsonl\"\n\
         [evaluation]\nfeature_sets = [\"trained\", \"inferred\"]\ncv_folds = 4",
    );
    let report = run_experiment(&cfg).unwrap();
    let cells: Vec<(FeatureSet, Option<usize>)> =
        report.rows.iter().map(|r| (r.feature_set, r.k)).collect();
    assert_eq!(
        cells,
        vec![
            (FeatureSet::Trained, Some(2)),
            (FeatureSet::Trained, Some(4)),
            (FeatureSet::Inferred, Some(2)),
            (FeatureSet::Inferred, Some(4)),
        ]
    );
    for cell in ["trained_k2", "trained_k4", "inferred_k2", "inferred_k4"] {
        let d = cfg.output_dir.join("cells").join(cell);
        assert!(d.join("result.json").exists(), "{cell}");
        assert!(d.join("correlations.csv").exists(), "{cell}");
    }
}

#[test]
fn planted_topic_beats_intercept_baseline() {
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), 150, 4);
    let mut cfg = config(
        dir.path(),
        "k_list = [3]\n[evaluation]\nfeature_sets = [\"trained\"]\ncv_folds = 5",
    );
    cfg.lda.iterations = 150;
    let report = run_experiment(&cfg).unwrap();
    let baseline = report
        .baselines
        .iter()
        .find(|b| b.model == "intercept_only")
        .unwrap()
        .mean_rmse;
    assert!(
        report.rows[0].mean_rmse < baseline,
        "{} vs {baseline}",
        report.rows[0].mean_rmse
    );
}

#[test]
fn cache_is_reused_and_matches() {
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), 40, 6);
    let cfg = config(
        dir.path(),
        "k_list = [3]\n[evaluation]\nfeature_sets = [\"trained\"]\ncv_folds = 4",
    );
    let first = run_experiment(&cfg).unwrap();
    let entries = std::fs::read_dir(cfg.output_dir.join("cache"))
        .unwrap()
        .count();
    let second = run_experiment(&cfg).unwrap();
    assert_eq!(first.rows, second.rows);
    assert_eq!(
        std::fs::read_dir(cfg.output_dir.join("cache"))
            .unwrap()
            .count(),
        entries
    );

    let mut other = cfg.clone();
    other.seed += 1;
    run_experiment(&other).unwrap();
    assert_eq!(
        std::fs::read_dir(cfg.output_dir.join("cache"))
            .unwrap()
            .count(),
        entries + 1
    );
}

#[test]
fn failing_cell_flushes_partial_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), 40, 7);
    // every pre-training word is unknown to the target corpus
    std::fs::create_dir(dir.path().join("pre")).unwrap();
    std::fs::write(
        dir.path().join("pre/messages.jsonl"),
        "{\"user_id\":\"p1\",\"text\":\"zz yy\"}\n{\"user_id\":\"p2\",\"text\":\"xx zz\"}\n",
    )
    .unwrap();
    let cfg = config(
        dir.path(),
        "k_list = [2]\n[pretrain]\nmessages = \"pre/messages.jsonl\"\n\
         [evaluation]\nfeature_sets = [\"liwc\", \"inferred\"]\ncv_folds = 4",
    );
    let err = run_experiment(&cfg).unwrap_err();
    match &err {
        Error::Cell { feature_set, k, .. } => {
            assert_eq!(feature_set, "inferred");
            assert_eq!(*k, Some(2));
        }
        other => panic!("unexpected error {other}"),
    }
    assert!(err.to_string().starts_with("[inferred K=2]"), "{err}");
    let partial = read_report_csv(&cfg.output_dir.join("report.csv")).unwrap();
    assert_eq!(partial.len(), 1);
    assert_eq!(partial[0].feature_set, FeatureSet::Liwc);
}

#[test]
fn min_bytes_threshold_drops_short_users() {
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), 40, 8);
    let mut cfg = config(
        dir.path(),
        "[evaluation]\nfeature_sets = [\"liwc\"]\ncv_folds = 4",
    );
    cfg.corpus.min_bytes = 20480;
    let err = run_experiment(&cfg).unwrap_err();
    assert!(err.to_string().contains("0 scored users"), "{err}");
}
