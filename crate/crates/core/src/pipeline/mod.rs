//! Experiment orchestration: corpus loading, feature extraction for every
//! (feature set, K) cell, cross-validated stepwise regression, and report
//! files.

mod config;
mod experiment;
mod report;
pub mod synth;

pub use config::{
    CorpusSection, EvaluationSection, ExperimentConfig, FeatureSet, LdaSection, LexiconSection,
    PretrainSection,
};
pub use experiment::{
    evaluate_features, intercept_only, liwc_matrix, load_corpus, run_experiment, theta_matrix,
    CellResult, EvalOptions,
};
pub use report::{
    emit_figures, read_report_csv, write_report, BaselineRow, EvalReport, ReportMeta, ReportRow,
};
