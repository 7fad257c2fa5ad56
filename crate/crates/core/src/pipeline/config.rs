//! Experiment configuration, read from TOML. Unknown keys are rejected.
//!
//! ```toml
//! seed = 1                      # drives LDA, inference and fold assignment
//! output_dir = "out"            # relative paths resolve against this file
//!
//! [corpus]
//! messages = "messages.jsonl"   # raw messages; or `documents` for an ingested corpus
//! scores = "scores.csv"         # user_id,score
//! min_bytes = 20480             # users with less cleaned text are dropped
//! keep_hashtag_text = false
//!
//! [segmenter]
//! mode = "pre_segmented"        # or "max_match" (needs dictionary_path)
//! dictionary_path = "dict.txt"
//! stopword_path = "stop.txt"
//!
//! [lexicon]
//! path = "liwc.dic"             # required by feature sets containing liwc
//!
//! [pretrain]                    # source of the frozen model for inferred topics
//! messages = "other.jsonl"      # or `documents`, or `model = "models/k{k}.json"`
//! scores = "other_scores.csv"
//! high_risk_only = false        # keep users above mean + 1 SD only
//!
//! [lda]
//! k_list = [10, 20, 30]
//! alpha_sum = 5.0               # symmetric alpha = alpha_sum / K
//! beta = 0.01
//! iterations = 1000
//! min_doc_freq = 1
//! infer_iterations = 100
//! infer_burn_in = 50
//! cache = true                  # reuse models and theta keyed by content hash
//!
//! [evaluation]
//! feature_sets = ["liwc", "trained", "inferred", "liwc+trained", "liwc+inferred"]
//! cv_folds = 10
//! significance = 0.01
//! direction = "both"            # or "backward"
//! drop_collinear = true
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{SegmenterConfig, DEFAULT_MIN_BYTES};
use crate::lda::{
    DEFAULT_ALPHA_SUM, DEFAULT_BETA, DEFAULT_INFER_BURN_IN, DEFAULT_INFER_ITERATIONS,
    DEFAULT_TRAIN_ITERATIONS,
};
use crate::stats::Direction;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "liwc")]
    Liwc,
    #[serde(rename = "trained")]
    Trained,
    #[serde(rename = "inferred")]
    Inferred,
    #[serde(rename = "liwc+trained")]
    LiwcTrained,
    #[serde(rename = "liwc+inferred")]
    LiwcInferred,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [
        FeatureSet::Liwc,
        FeatureSet::Trained,
        FeatureSet::Inferred,
        FeatureSet::LiwcTrained,
        FeatureSet::LiwcInferred,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Liwc => "liwc",
            FeatureSet::Trained => "trained",
            FeatureSet::Inferred => "inferred",
            FeatureSet::LiwcTrained => "liwc+trained",
            FeatureSet::LiwcInferred => "liwc+inferred",
        }
    }

    pub fn uses_liwc(self) -> bool {
        matches!(
            self,
            FeatureSet::Liwc | FeatureSet::LiwcTrained | FeatureSet::LiwcInferred
        )
    }

    pub fn uses_trained(self) -> bool {
        matches!(self, FeatureSet::Trained | FeatureSet::LiwcTrained)
    }

    pub fn uses_inferred(self) -> bool {
        matches!(self, FeatureSet::Inferred | FeatureSet::LiwcInferred)
    }

    pub fn uses_topics(self) -> bool {
        self.uses_trained() || self.uses_inferred()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature set `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    #[serde(default)]
    pub messages: Option<PathBuf>,
    #[serde(default)]
    pub documents: Option<PathBuf>,
    #[serde(default)]
    pub scores: Option<PathBuf>,
    #[serde(default = "default_min_bytes")]
    pub min_bytes: usize,
    #[serde(default)]
    pub keep_hashtag_text: bool,
}

fn default_min_bytes() -> usize {
    DEFAULT_MIN_BYTES
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainSection {
    #[serde(default)]
    pub messages: Option<PathBuf>,
    #[serde(default)]
    pub documents: Option<PathBuf>,
    #[serde(default)]
    pub scores: Option<PathBuf>,
    #[serde(default)]
    pub high_risk_only: bool,
    /// Saved model path; `{k}` is replaced by the number of topics.
    #[serde(default)]
    pub model: Option<String>,
    /// Byte threshold for pre-training users; defaults to the target corpus'.
    #[serde(default)]
    pub min_bytes: Option<usize>,
}

impl PretrainSection {
    pub fn is_configured(&self) -> bool {
        self.messages.is_some() || self.documents.is_some() || self.model.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaSection {
    #[serde(default)]
    pub k_list: Vec<usize>,
    #[serde(default = "default_alpha_sum")]
    pub alpha_sum: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_one")]
    pub min_doc_freq: usize,
    #[serde(default = "default_infer_iterations")]
    pub infer_iterations: usize,
    #[serde(default = "default_infer_burn_in")]
    pub infer_burn_in: usize,
    #[serde(default = "default_true")]
    pub cache: bool,
}

fn default_alpha_sum() -> f64 {
    DEFAULT_ALPHA_SUM
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_iterations() -> usize {
    DEFAULT_TRAIN_ITERATIONS
}
fn default_one() -> usize {
    1
}
fn default_infer_iterations() -> usize {
    DEFAULT_INFER_ITERATIONS
}
fn default_infer_burn_in() -> usize {
    DEFAULT_INFER_BURN_IN
}
fn default_true() -> bool {
    true
}

impl Default for LdaSection {
    fn default() -> Self {
        LdaSection {
            k_list: Vec::new(),
            alpha_sum: DEFAULT_ALPHA_SUM,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_TRAIN_ITERATIONS,
            min_doc_freq: 1,
            infer_iterations: DEFAULT_INFER_ITERATIONS,
            infer_burn_in: DEFAULT_INFER_BURN_IN,
            cache: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    #[serde(default = "default_feature_sets")]
    pub feature_sets: Vec<FeatureSet>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_significance")]
    pub significance: f64,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default = "default_true")]
    pub drop_collinear: bool,
}

fn default_feature_sets() -> Vec<FeatureSet> {
    vec![FeatureSet::Trained]
}
fn default_folds() -> usize {
    10
}
fn default_significance() -> f64 {
    0.01
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            feature_sets: default_feature_sets(),
            cv_folds: 10,
            significance: 0.01,
            direction: Direction::Both,
            drop_collinear: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub segmenter: SegmenterConfig,
    #[serde(default)]
    pub lexicon: LexiconSection,
    #[serde(default)]
    pub pretrain: PretrainSection,
    #[serde(default)]
    pub lda: LdaSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Parses TOML; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| {
            Error::Config(format!(
                "{}: {}",
                path.display(),
                e.to_string().trim_start_matches("configuration error: ")
            ))
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        fix(&mut self.corpus.messages);
        fix(&mut self.corpus.documents);
        fix(&mut self.corpus.scores);
        fix(&mut self.segmenter.dictionary_path);
        fix(&mut self.segmenter.stopword_path);
        fix(&mut self.lexicon.path);
        fix(&mut self.pretrain.messages);
        fix(&mut self.pretrain.documents);
        fix(&mut self.pretrain.scores);
        if let Some(m) = &mut self.pretrain.model {
            if Path::new(m.as_str()).is_relative() {
                *m = base.join(&*m).to_string_lossy().into_owned();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sets = &self.evaluation.feature_sets;
        if sets.is_empty() {
            return Err(Error::Config("evaluation.feature_sets is empty".into()));
        }
        if self.corpus.messages.is_none() == self.corpus.documents.is_none() {
            return Err(Error::Config(
                "exactly one of corpus.messages and corpus.documents must be set".into(),
            ));
        }
        if sets.iter().any(|s| s.uses_topics()) && self.lda.k_list.is_empty() {
            return Err(Error::Config(
                "topic feature sets need a non-empty lda.k_list".into(),
            ));
        }
        if self.lda.k_list.contains(&0) {
            return Err(Error::Config(
                "lda.k_list entries must be at least 1".into(),
            ));
        }
        if sets.iter().any(|s| s.uses_liwc()) && self.lexicon.path.is_none() {
            return Err(Error::Config("liwc feature sets need lexicon.path".into()));
        }
        if sets.iter().any(|s| s.uses_inferred()) {
            if !self.pretrain.is_configured() {
                return Err(Error::Config(
                    "inferred feature sets need pretrain.messages, pretrain.documents or pretrain.model".into(),
                ));
            }
            if self.pretrain.high_risk_only
                && self.pretrain.model.is_none()
                && self.pretrain.scores.is_none()
            {
                return Err(Error::Config(
                    "pretrain.high_risk_only needs pretrain.scores".into(),
                ));
            }
        }
        if self.lda.infer_iterations <= self.lda.infer_burn_in {
            return Err(Error::Config(
                "lda.infer_iterations must exceed lda.infer_burn_in".into(),
            ));
        }
        if self.evaluation.cv_folds < 2 {
            return Err(Error::Config(
                "evaluation.cv_folds must be at least 2".into(),
            ));
        }
        if !(self.evaluation.significance > 0.0 && self.evaluation.significance < 1.0) {
            return Err(Error::Config(
                "evaluation.significance must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}
