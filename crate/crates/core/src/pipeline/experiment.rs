use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, FeatureSet};
use super::report::{write_partial, write_report, BaselineRow, EvalReport, ReportMeta, ReportRow};
use crate::corpus::{
    aggregate_users, filter_users, high_risk_subset, read_corpus_jsonl, read_messages_jsonl,
    read_scores_csv, write_corpus_jsonl, CleanConfig, Corpus, Preprocessor,
};
use crate::lda::{
    build_vocabulary, infer, load_model, read_theta_csv, save_model, topic_column_names, train,
    write_theta_csv, DocTopicDistribution, InferParams, TopicModel, TrainParams,
};
use crate::lexicon::{load_lexicon, Lexicon};
use crate::stats::{
    kfold_cv, ols_fit, significant_topic_summary, stepwise_select, CVResult, FeatureMatrix,
    FitStats, LinearModel, RankPolicy, StepwiseOptions, TopicSummary,
};
use crate::{Error, Result};

/// Settings for evaluating one feature matrix.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub cv_folds: usize,
    pub seed: u64,
    pub significance: f64,
    pub stepwise: StepwiseOptions,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cv: CVResult,
    pub summary: TopicSummary,
    /// Stepwise model fitted on every row.
    pub model: LinearModel,
    /// Best single feature by |r| and its cross-validated RMSE.
    pub best_single: Option<(String, f64)>,
}

/// Model predicting the mean of the training scores.
pub fn intercept_only(y: &[f64]) -> Result<LinearModel> {
    if y.is_empty() {
        return Err(Error::InvalidArgument("no training rows".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    Ok(LinearModel {
        intercept: mean,
        coefficients: Vec::new(),
        fit_stats: FitStats {
            rss: y.iter().map(|v| (v - mean).powi(2)).sum(),
            n: y.len(),
            p: 0,
        },
    })
}

/// Cross-validates stepwise regression on `x`, summarises the correlations
/// of the `summary_columns` with `y`, and fits the final model on all rows.
pub fn evaluate_features(
    x: &FeatureMatrix,
    y: &[f64],
    summary_columns: &[String],
    opts: &EvalOptions,
) -> Result<CellResult> {
    let stepwise = opts.stepwise;
    let cv = kfold_cv(x, y, opts.cv_folds, opts.seed, |x, y| {
        stepwise_select(x, y, stepwise)
    })?;
    let summary =
        significant_topic_summary(&x.select_columns(summary_columns)?, y, opts.significance)?;
    let model = stepwise_select(x, y, stepwise)?;
    let best_single = match &summary.argmax {
        Some(name) => {
            let single = x.select_columns(std::slice::from_ref(name))?;
            let cv = kfold_cv(&single, y, opts.cv_folds, opts.seed, ols_fit)?;
            Some((name.clone(), cv.mean_rmse))
        }
        None => None,
    };
    Ok(CellResult {
        cv,
        summary,
        model,
        best_single,
    })
}

/// Lexicon features with columns named `liwc_<category>`.
pub fn liwc_matrix(corpus: &Corpus, lexicon: &Lexicon) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = corpus
        .documents
        .iter()
        .map(|d| lexicon.extract_features(d).values)
        .collect();
    FeatureMatrix::from_rows(
        corpus.documents.iter().map(|d| d.user_id.clone()).collect(),
        lexicon
            .category_names()
            .map(|n| format!("liwc_{n}"))
            .collect(),
        &rows,
    )
}

pub fn theta_matrix(thetas: &[DocTopicDistribution], k: usize) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = thetas.iter().map(|t| t.theta.clone()).collect();
    FeatureMatrix::from_rows(
        thetas.iter().map(|t| t.user_id.clone()).collect(),
        topic_column_names(k),
        &rows,
    )
}

/// Loads raw messages (or an ingested corpus), attaches scores and applies
/// the byte threshold. Users left without tokens are dropped.
pub fn load_corpus(
    messages: Option<&Path>,
    documents: Option<&Path>,
    scores: Option<&Path>,
    min_bytes: usize,
    require_score: bool,
    pre: &Preprocessor,
) -> Result<Corpus> {
    let mut corpus = match (messages, documents) {
        (Some(m), _) => {
            let mut c = aggregate_users(&read_messages_jsonl(m)?, pre);
            c.provenance = format!("{}: {}", m.display(), c.provenance);
            c
        }
        (None, Some(d)) => read_corpus_jsonl(d)?,
        (None, None) => return Err(Error::Config("no corpus source given".into())),
    };
    if let Some(s) = scores {
        corpus.attach_scores(&read_scores_csv(s)?);
    }
    let mut corpus = filter_users(corpus, min_bytes, require_score);
    let before = corpus.len();
    corpus.documents.retain(|d| !d.tokens.is_empty());
    if corpus.len() < before {
        log::warn!("dropped {} users with no tokens", before - corpus.len());
        corpus.provenance.push_str(&format!(
            "; {} token-less users dropped",
            before - corpus.len()
        ));
    }
    Ok(corpus)
}

#[derive(Default)]
struct ContentHash(Sha256);

impl ContentHash {
    fn add(mut self, part: impl AsRef<[u8]>) -> Self {
        let bytes = part.as_ref();
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
        self
    }

    fn corpus(self, corpus: &Corpus) -> Self {
        corpus.documents.iter().fold(self, |h, d| {
            let h = h.add(&d.user_id);
            d.tokens.iter().fold(h, |h, t| h.add(t)).add([0xff])
        })
    }

    fn hex(self) -> String {
        self.0
            .finalize()
            .iter()
            .take(12)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn derive_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct TopicFeatures {
    k: usize,
    trained: Option<FeatureMatrix>,
    inferred: Option<FeatureMatrix>,
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    cache_dir: PathBuf,
    target: Corpus,
    pretrain: Option<Corpus>,
}

impl Runner<'_> {
    fn params(&self, k: usize) -> TrainParams {
        TrainParams {
            k,
            alpha: self.cfg.lda.alpha_sum / k as f64,
            beta: self.cfg.lda.beta,
            iterations: self.cfg.lda.iterations,
        }
    }

    fn train_hash(&self, tag: &str, corpus: &Corpus, p: &TrainParams) -> ContentHash {
        ContentHash::default()
            .add(tag)
            .corpus(corpus)
            .add(p.k.to_le_bytes())
            .add(p.alpha.to_le_bytes())
            .add(p.beta.to_le_bytes())
            .add(p.iterations.to_le_bytes())
            .add(self.cfg.lda.min_doc_freq.to_le_bytes())
            .add(self.cfg.seed.to_le_bytes())
    }

    /// Trains (or loads from cache) a model on `corpus`, returning it with
    /// the training-time theta.
    fn trained(
        &self,
        tag: &str,
        corpus: &Corpus,
        k: usize,
    ) -> Result<(TopicModel, Vec<DocTopicDistribution>, String)> {
        let params = self.params(k);
        let key = self.train_hash(tag, corpus, &params).hex();
        let dir = self.cache_dir.join(&key);
        let (model_path, theta_path) = (dir.join("model.json"), dir.join("theta.csv"));
        if self.cfg.lda.cache && model_path.exists() && theta_path.exists() {
            log::info!("K={k}: reusing cached {tag} model {key}");
            return Ok((load_model(&model_path)?, read_theta_csv(&theta_path)?, key));
        }
        log::info!("K={k}: training {tag} model on {} documents", corpus.len());
        let vocab = build_vocabulary(corpus, self.cfg.lda.min_doc_freq)?;
        let (model, thetas) = train(corpus, vocab, &params, self.cfg.seed)?;
        save_model(&model, &model_path)?;
        write_theta_csv(&thetas, k, &theta_path)?;
        write_top_words(&model, &dir.join("top_words.csv"))?;
        Ok((model, thetas, key))
    }

    fn inferred(&self, k: usize) -> Result<FeatureMatrix> {
        let (model, model_key) = match &self.cfg.pretrain.model {
            Some(template) => {
                let path = PathBuf::from(template.replace("{k}", &k.to_string()));
                let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                let model = load_model(&path)?;
                if model.num_topics() != k {
                    return Err(Error::Config(format!(
                        "{} has K = {}, expected {k}",
                        path.display(),
                        model.num_topics()
                    )));
                }
                (model, ContentHash::default().add(bytes).hex())
            }
            None => {
                let pretrain = self.pretrain.as_ref().expect("pretraining corpus loaded");
                let (model, _, key) = self.trained("pretrain", pretrain, k)?;
                (model, key)
            }
        };
        let params = InferParams {
            iterations: self.cfg.lda.infer_iterations,
            burn_in: self.cfg.lda.infer_burn_in,
        };
        let key = ContentHash::default()
            .add("inferred")
            .add(&model_key)
            .corpus(&self.target)
            .add(params.iterations.to_le_bytes())
            .add(params.burn_in.to_le_bytes())
            .add(self.cfg.seed.to_le_bytes())
            .hex();
        let theta_path = self.cache_dir.join(&key).join("theta.csv");
        let thetas = if self.cfg.lda.cache && theta_path.exists() {
            log::info!("K={k}: reusing cached inferred theta {key}");
            read_theta_csv(&theta_path)?
        } else {
            log::info!("K={k}: inferring {} documents", self.target.len());
            let thetas = self
                .target
                .documents
                .par_iter()
                .enumerate()
                .map(|(i, d)| infer(&model, d, params, derive_seed(self.cfg.seed, i)))
                .collect::<Result<Vec<_>>>()?;
            write_theta_csv(&thetas, k, &theta_path)?;
            thetas
        };
        theta_matrix(&thetas, k)
    }

    fn topic_features(
        &self,
        k: usize,
        need_trained: bool,
        need_inferred: bool,
    ) -> Result<TopicFeatures> {
        let trained = if need_trained {
            let (_, thetas, _) = self
                .trained("trained", &self.target, k)
                .map_err(|e| cell_error("trained", Some(k), e))?;
            Some(theta_matrix(&thetas, k)?)
        } else {
            None
        };
        let inferred = if need_inferred {
            Some(
                self.inferred(k)
                    .map_err(|e| cell_error("inferred", Some(k), e))?,
            )
        } else {
            None
        };
        Ok(TopicFeatures {
            k,
            trained,
            inferred,
        })
    }
}

fn cell_error(feature_set: &str, k: Option<usize>, e: Error) -> Error {
    match e {
        e @ Error::Cell { .. } => e,
        e => Error::Cell {
            feature_set: feature_set.to_owned(),
            k,
            source: Box::new(e),
        },
    }
}

fn write_top_words(model: &TopicModel, path: &Path) -> Result<()> {
    let mut w = crate::csvutil::writer(path)?;
    w.write_record(["topic", "rank", "word", "count"])?;
    for t in 0..model.num_topics() {
        for (rank, word) in model.top_words(t, 20)?.into_iter().enumerate() {
            let id = model
                .vocabulary()
                .id_of(&word)
                .expect("top word in vocabulary");
            w.write_record([
                t.to_string(),
                (rank + 1).to_string(),
                word,
                model.topic_word_count(t, id).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct CellArtifact<'a> {
    feature_set: &'a str,
    k: Option<usize>,
    fold_rmses: &'a [f64],
    mean_rmse: f64,
    model: serde_json::Value,
    best_single: Option<(&'a str, f64)>,
}

fn write_cell(dir: &Path, set: FeatureSet, k: Option<usize>, res: &CellResult) -> Result<()> {
    let name = match k {
        Some(k) => format!("{}_k{k}", set.as_str().replace('+', "_")),
        None => set.as_str().replace('+', "_"),
    };
    let dir = dir.join("cells").join(name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let artifact = CellArtifact {
        feature_set: set.as_str(),
        k,
        fold_rmses: &res.cv.fold_rmses,
        mean_rmse: res.cv.mean_rmse,
        model: res.model.to_json(),
        best_single: res.best_single.as_ref().map(|(n, r)| (n.as_str(), *r)),
    };
    let path = dir.join("result.json");
    std::fs::write(&path, serde_json::to_string_pretty(&artifact)? + "\n")
        .map_err(|e| Error::io(&path, e))?;

    let path = dir.join("correlations.csv");
    let mut w = crate::csvutil::writer(&path)?;
    w.write_record(["feature", "r", "p_value"])?;
    for (name, c) in &res.summary.correlations {
        match c {
            Some(c) => w.write_record([name.clone(), c.r.to_string(), c.p_value.to_string()])?,
            None => w.write_record([name.as_str(), "", ""])?,
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    Ok(ContentHash::default().add(serde_json::to_vec(&c)?).hex())
}

/// Runs the full grid described by `cfg` and writes `report.csv`,
/// `baselines.csv`, `report_meta.json` and per-cell artifacts under
/// `cfg.output_dir`.
///
/// Topic models are fitted once per K on tokens only and shared by every
/// cross-validation fold; scores never reach the sampler. If a cell fails,
/// the rows finished so far are written before the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let sets = &cfg.evaluation.feature_sets;

    let pre = Preprocessor::from_config(
        CleanConfig {
            keep_hashtag_text: cfg.corpus.keep_hashtag_text,
        },
        &cfg.segmenter,
    )?;
    let scores_path = cfg
        .corpus
        .scores
        .as_deref()
        .ok_or_else(|| Error::Config("evaluation needs corpus.scores".into()))?;
    let target = load_corpus(
        cfg.corpus.messages.as_deref(),
        cfg.corpus.documents.as_deref(),
        Some(scores_path),
        cfg.corpus.min_bytes,
        true,
        &pre,
    )?;
    if target.len() < cfg.evaluation.cv_folds {
        return Err(Error::InvalidArgument(format!(
            "{} scored users left after filtering; need at least {} for cross-validation",
            target.len(),
            cfg.evaluation.cv_folds
        )));
    }
    write_corpus_jsonl(&target, &out.join("corpus.jsonl"))?;
    let y = target.scores()?;
    log::info!("target corpus: {}", target.provenance);

    let need_inferred = sets.iter().any(|s| s.uses_inferred());
    let pretrain = if need_inferred && cfg.pretrain.model.is_none() {
        let p = &cfg.pretrain;
        let corpus = load_corpus(
            p.messages.as_deref(),
            p.documents.as_deref(),
            p.scores.as_deref(),
            p.min_bytes.unwrap_or(cfg.corpus.min_bytes),
            p.high_risk_only,
            &pre,
        )?;
        let corpus = if p.high_risk_only {
            high_risk_subset(&corpus)?
        } else {
            corpus
        };
        if corpus.is_empty() {
            return Err(Error::InvalidArgument(
                "pre-training corpus is empty after filtering".into(),
            ));
        }
        log::info!("pre-training corpus: {}", corpus.provenance);
        Some(corpus)
    } else {
        None
    };

    let liwc = if sets.iter().any(|s| s.uses_liwc()) {
        let path = cfg.lexicon.path.as_deref().expect("validated");
        Some(liwc_matrix(&target, &load_lexicon(path)?)?)
    } else {
        None
    };

    let runner = Runner {
        cfg,
        cache_dir: out.join("cache"),
        target,
        pretrain,
    };
    let need_trained = sets.iter().any(|s| s.uses_trained());
    let ks: Vec<usize> = if sets.iter().any(|s| s.uses_topics()) {
        cfg.lda.k_list.clone()
    } else {
        Vec::new()
    };
    let topic_results: Vec<Result<TopicFeatures>> = ks
        .par_iter()
        .map(|&k| runner.topic_features(k, need_trained, need_inferred))
        .collect();

    let opts = EvalOptions {
        cv_folds: cfg.evaluation.cv_folds,
        seed: cfg.seed,
        significance: cfg.evaluation.significance,
        stepwise: StepwiseOptions {
            direction: cfg.evaluation.direction,
            rank_policy: if cfg.evaluation.drop_collinear {
                RankPolicy::DropDependent
            } else {
                RankPolicy::Fail
            },
        },
    };

    // the intercept-only fit ignores its features; a zero column carries the row ids
    let ids: Vec<String> = runner
        .target
        .documents
        .iter()
        .map(|d| d.user_id.clone())
        .collect();
    let placeholder = FeatureMatrix::new(ids, vec!["none".into()], vec![0.0; y.len()])?;
    let intercept_cv = kfold_cv(&placeholder, &y, opts.cv_folds, opts.seed, |_, y| {
        intercept_only(y)
    })?;
    let mut report = EvalReport {
        rows: Vec::new(),
        baselines: vec![BaselineRow {
            feature_set: None,
            k: None,
            model: "intercept_only".into(),
            feature: None,
            mean_rmse: intercept_cv.mean_rmse,
        }],
        meta: ReportMeta {
            seed: cfg.seed,
            config_hash: config_hash(cfg)?,
            cv_folds: cfg.evaluation.cv_folds,
            significance: cfg.evaluation.significance,
            n_users: runner.target.len(),
            corpus_provenance: runner.target.provenance.clone(),
            pretrain_provenance: runner.pretrain.as_ref().map(|c| c.provenance.clone()),
        },
    };

    let mut seen = HashSet::new();
    for &set in sets {
        if !seen.insert(set) {
            continue;
        }
        let cells: Vec<Option<usize>> = if set.uses_topics() {
            ks.iter().map(|&k| Some(k)).collect()
        } else {
            vec![None]
        };
        for k in cells {
            let result = evaluate_cell(set, k, liwc.as_ref(), &topic_results, &y, &opts, out)
                .map_err(|e| cell_error(set.as_str(), k, e));
            match result {
                Ok((row, best)) => {
                    if let Some(b) = best {
                        report.baselines.push(b);
                    }
                    report.rows.push(row);
                }
                Err(e) => {
                    write_partial(&report.rows, out)?;
                    return Err(e);
                }
            }
        }
    }
    write_report(&report, out)?;
    Ok(report)
}

fn evaluate_cell(
    set: FeatureSet,
    k: Option<usize>,
    liwc: Option<&FeatureMatrix>,
    topics: &[Result<TopicFeatures>],
    y: &[f64],
    opts: &EvalOptions,
    out: &Path,
) -> Result<(ReportRow, Option<BaselineRow>)> {
    let topic_matrix = match k {
        Some(k) => {
            let tf = match topics
                .iter()
                .find(|r| r.as_ref().map_or(true, |t| t.k == k))
            {
                Some(Ok(tf)) if tf.k == k => tf,
                Some(Err(e)) => {
                    return Err(Error::InvalidArgument(format!(
                        "topic features unavailable: {e}"
                    )));
                }
                _ => unreachable!("topic features computed for every K"),
            };
            let m = if set.uses_trained() {
                &tf.trained
            } else {
                &tf.inferred
            };
            Some(m.as_ref().expect("requested topic family computed"))
        }
        None => None,
    };
    let (x, summary_columns) = match (set.uses_liwc(), topic_matrix) {
        (true, Some(t)) => {
            let l = liwc.expect("lexicon features computed");
            (l.hstack(t)?, t.column_names().to_vec())
        }
        (true, None) => {
            let l = liwc.expect("lexicon features computed");
            (l.clone(), l.column_names().to_vec())
        }
        (false, Some(t)) => (t.clone(), t.column_names().to_vec()),
        (false, None) => unreachable!("feature set without columns"),
    };
    let res = evaluate_features(&x, y, &summary_columns, opts)?;
    write_cell(out, set, k, &res)?;
    log::info!(
        "{set}{}: CV RMSE {:.4}, {} significant, max |r| {:.4}",
        k.map(|k| format!(" K={k}")).unwrap_or_default(),
        res.cv.mean_rmse,
        res.summary.n_significant,
        res.summary.max_abs_r
    );
    let best = res.best_single.as_ref().map(|(name, rmse)| BaselineRow {
        feature_set: Some(set),
        k,
        model: "best_single".into(),
        feature: Some(name.clone()),
        mean_rmse: *rmse,
    });
    let row = ReportRow {
        feature_set: set,
        k,
        mean_rmse: res.cv.mean_rmse,
        n_significant_topics: res.summary.n_significant,
        max_abs_r: res.summary.max_abs_r,
        selected_features: res
            .model
            .selected_features()
            .into_iter()
            .map(str::to_owned)
            .collect(),
    };
    Ok((row, best))
}
