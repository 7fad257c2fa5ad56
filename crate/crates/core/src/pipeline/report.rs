use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::FeatureSet;
use crate::{csvutil, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub feature_set: FeatureSet,
    /// `None` for feature sets without topics.
    pub k: Option<usize>,
    pub mean_rmse: f64,
    /// Computed over the topic columns, or over the lexicon columns for the
    /// lexicon-only set.
    pub n_significant_topics: usize,
    pub max_abs_r: f64,
    /// Features chosen by stepwise selection on all rows.
    pub selected_features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub feature_set: Option<FeatureSet>,
    pub k: Option<usize>,
    /// `intercept_only` or `best_single`.
    pub model: String,
    pub feature: Option<String>,
    pub mean_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub config_hash: String,
    pub cv_folds: usize,
    pub significance: f64,
    pub n_users: usize,
    pub corpus_provenance: String,
    pub pretrain_provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub baselines: Vec<BaselineRow>,
    pub meta: ReportMeta,
}

fn k_field(k: Option<usize>) -> String {
    k.map(|k| k.to_string()).unwrap_or_default()
}

fn write_rows(rows: &[ReportRow], path: &Path) -> Result<()> {
    let mut w = csvutil::writer(path)?;
    w.write_record([
        "feature_set",
        "k",
        "mean_rmse",
        "n_significant_topics",
        "max_abs_r",
        "selected_features",
    ])?;
    for r in rows {
        w.write_record([
            r.feature_set.as_str().to_owned(),
            k_field(r.k),
            r.mean_rmse.to_string(),
            r.n_significant_topics.to_string(),
            r.max_abs_r.to_string(),
            r.selected_features.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `report.csv`, `baselines.csv` and `report_meta.json` into `dir`.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    write_rows(&report.rows, &dir.join("report.csv"))?;

    let path = dir.join("baselines.csv");
    let mut w = csvutil::writer(&path)?;
    w.write_record(["feature_set", "k", "model", "feature", "mean_rmse"])?;
    for b in &report.baselines {
        w.write_record([
            b.feature_set
                .map(|f| f.as_str().to_owned())
                .unwrap_or_default(),
            k_field(b.k),
            b.model.clone(),
            b.feature.clone().unwrap_or_default(),
            b.mean_rmse.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("report_meta.json");
    let text = serde_json::to_string_pretty(&report.meta)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Writes only the rows computed so far, so a failing run leaves its
/// completed cells on disk.
pub(crate) fn write_partial(rows: &[ReportRow], dir: &Path) -> Result<()> {
    write_rows(rows, &dir.join("report.csv"))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut rdr = csvutil::reader(path)?;
    let headers = rdr.headers()?.clone();
    let expected = [
        "feature_set",
        "k",
        "mean_rmse",
        "n_significant_topics",
        "max_abs_r",
        "selected_features",
    ];
    if headers.iter().ne(expected) {
        return Err(Error::parse(
            path.display(),
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::parse(path.display(), line, format!("bad {what}"));
        rows.push(ReportRow {
            feature_set: rec[0].parse()?,
            k: if rec[1].is_empty() {
                None
            } else {
                Some(rec[1].parse().map_err(|_| bad("k"))?)
            },
            mean_rmse: csvutil::parse_f64(path, &rec, 2)?,
            n_significant_topics: rec[3].parse().map_err(|_| bad("n_significant_topics"))?,
            max_abs_r: csvutil::parse_f64(path, &rec, 4)?,
            selected_features: rec[5]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .collect(),
        });
    }
    Ok(rows)
}

/// Writes plot-ready CSVs for the rows that have a topic count:
/// `rmse_vs_k.csv`, `sig_topics_vs_k.csv` and `max_r_vs_k.csv`. Returns the
/// files written; nothing is written when no row has a topic count.
pub fn emit_figures(rows: &[ReportRow], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot emit figures for an empty report".into(),
        ));
    }
    let topical: Vec<&ReportRow> = rows.iter().filter(|r| r.k.is_some()).collect();
    if topical.is_empty() {
        log::info!("no topic feature sets in report; figure files omitted");
        return Ok(Vec::new());
    }
    type Value = fn(&ReportRow) -> String;
    let figures: [(&str, &str, Value); 3] = [
        ("rmse_vs_k.csv", "mean_rmse", |r| r.mean_rmse.to_string()),
        ("sig_topics_vs_k.csv", "n_significant_topics", |r| {
            r.n_significant_topics.to_string()
        }),
        ("max_r_vs_k.csv", "max_abs_r", |r| r.max_abs_r.to_string()),
    ];
    let mut written = Vec::new();
    for (file, column, value) in figures {
        let path = dir.join(file);
        let mut w = csvutil::writer(&path)?;
        w.write_record(["feature_set", "k", column])?;
        for r in &topical {
            w.write_record([r.feature_set.as_str().to_owned(), k_field(r.k), value(r)])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
