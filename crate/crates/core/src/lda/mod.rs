//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! Two ways to get per-document topic proportions are supported:
//! [`train`] fits a model on the documents themselves and reports the
//! smoothed proportions from the final sweep, while [`infer`] samples
//! assignments for a new document against a model frozen after training on
//! a different corpus.

mod gibbs;
mod infer;
mod persist;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use gibbs::{train, GibbsSampler, TrainParams};
pub use infer::{infer, InferParams};
pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION};

use crate::corpus::{Corpus, UserDocument};
use crate::{csvutil, Error, Result};

/// Total Dirichlet concentration over topics; the default symmetric alpha is
/// this divided by K.
pub const DEFAULT_ALPHA_SUM: f64 = 5.0;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_TRAIN_ITERATIONS: usize = 1000;
pub const DEFAULT_INFER_ITERATIONS: usize = 100;
pub const DEFAULT_INFER_BURN_IN: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from words that are already in id order.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut ids = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if ids.insert(w.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vocabulary word `{w}`"
                )));
            }
        }
        Ok(Vocabulary { words, ids })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id_of(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word_of(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// In-vocabulary token ids of `tokens`, in order; unknown tokens are skipped.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id_of(t)).collect()
    }
}

/// Every token occurring in at least `min_doc_freq` documents, with ids
/// assigned in lexicographic order.
pub fn build_vocabulary(corpus: &Corpus, min_doc_freq: usize) -> Result<Vocabulary> {
    if min_doc_freq == 0 {
        return Err(Error::InvalidArgument(
            "min_doc_freq must be at least 1".into(),
        ));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &corpus.documents {
        let distinct: BTreeSet<&str> = d.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let words: Vec<String> = df
        .into_iter()
        .filter(|&(_, n)| n >= min_doc_freq)
        .map(|(w, _)| w.to_owned())
        .collect();
    if words.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::from_words(words)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub seed: u64,
    pub provenance: String,
}

/// A frozen topic model: topic-word assignment counts plus the priors they
/// were sampled under.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    k: usize,
    alpha: f64,
    beta: f64,
    /// Row-major K x V.
    n_kw: Vec<u32>,
    n_k: Vec<u64>,
    vocabulary: Vocabulary,
    pub meta: TrainingMeta,
}

impl TopicModel {
    /// Assembles a model from topic-word counts given row-major (K x V);
    /// per-topic totals are derived.
    pub fn from_counts(
        k: usize,
        alpha: f64,
        beta: f64,
        n_kw: Vec<u32>,
        vocabulary: Vocabulary,
        meta: TrainingMeta,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be positive, got alpha={alpha} beta={beta}"
            )));
        }
        let v = vocabulary.len();
        if n_kw.len() != k * v {
            return Err(Error::LengthMismatch {
                left: n_kw.len(),
                right: k * v,
            });
        }
        let n_k = if v == 0 {
            vec![0; k]
        } else {
            n_kw.chunks(v)
                .map(|row| row.iter().map(|&c| c as u64).sum())
                .collect()
        };
        Ok(TopicModel {
            k,
            alpha,
            beta,
            n_kw,
            n_k,
            vocabulary,
            meta,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn topic_word_count(&self, topic: usize, word: u32) -> u32 {
        self.n_kw[topic * self.vocabulary.len() + word as usize]
    }

    pub fn topic_counts(&self, topic: usize) -> &[u32] {
        let v = self.vocabulary.len();
        &self.n_kw[topic * v..(topic + 1) * v]
    }

    pub fn topic_total(&self, topic: usize) -> u64 {
        self.n_k[topic]
    }

    /// Smoothed topic-word distribution (n_kw + beta) / (n_k + V beta).
    pub fn topic_word_distribution(&self, topic: usize) -> Vec<f64> {
        let vb = self.vocabulary.len() as f64 * self.beta;
        let denom = self.n_k[topic] as f64 + vb;
        self.topic_counts(topic)
            .iter()
            .map(|&c| (c as f64 + self.beta) / denom)
            .collect()
    }

    /// The `n` most frequent words of `topic`, ties broken lexicographically.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<String>> {
        if topic >= self.k {
            return Err(Error::InvalidArgument(format!(
                "topic {topic} out of range (K = {})",
                self.k
            )));
        }
        let counts = self.topic_counts(topic);
        let mut ids: Vec<u32> = (0..counts.len() as u32).collect();
        // ids are in lexicographic word order, so a stable sort keeps ties sorted
        ids.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]));
        Ok(ids
            .into_iter()
            .take(n)
            .map(|id| self.vocabulary.words[id as usize].clone())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicDistribution {
    pub user_id: String,
    pub theta: Vec<f64>,
}

pub(crate) fn encode_document(vocab: &Vocabulary, doc: &UserDocument) -> Result<Vec<u32>> {
    let ids = vocab.encode(&doc.tokens);
    if ids.is_empty() {
        return Err(Error::EmptyDocument {
            user_id: doc.user_id.clone(),
        });
    }
    Ok(ids)
}

pub fn topic_column_names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("topic_{i}")).collect()
}

/// Writes `user_id,topic_0,...,topic_{K-1}`.
pub fn write_theta_csv(rows: &[DocTopicDistribution], k: usize, path: &Path) -> Result<()> {
    let mut w = csvutil::writer(path)?;
    let mut header = vec!["user_id".to_owned()];
    header.extend(topic_column_names(k));
    w.write_record(&header)?;
    for r in rows {
        if r.theta.len() != k {
            return Err(Error::LengthMismatch {
                left: r.theta.len(),
                right: k,
            });
        }
        let mut rec = vec![r.user_id.clone()];
        rec.extend(r.theta.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_theta_csv(path: &Path) -> Result<Vec<DocTopicDistribution>> {
    let mut rdr = csvutil::reader(path)?;
    let k = rdr.headers()?.len().saturating_sub(1);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let theta = (1..=k)
            .map(|i| csvutil::parse_f64(path, &rec, i))
            .collect::<Result<_>>()?;
        out.push(DocTopicDistribution {
            user_id: rec[0].to_owned(),
            theta,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(docs: &[&[&str]]) -> Corpus {
        let documents = docs
            .iter()
            .enumerate()
            .map(|(i, toks)| UserDocument {
                user_id: format!("d{i}"),
                tokens: toks.iter().map(|s| s.to_string()).collect(),
                raw_byte_length: 0,
                score: None,
            })
            .collect();
        Corpus::new(documents, "").unwrap()
    }

    #[test]
    fn vocabulary_document_frequency() {
        let c = corpus(&[&["a"], &["a", "b"]]);
        assert_eq!(build_vocabulary(&c, 2).unwrap().words(), ["a"]);
        let all = build_vocabulary(&c, 1).unwrap();
        assert_eq!(all.words(), ["a", "b"]);
        assert_eq!(all.id_of("b"), Some(1));
        assert_eq!(all.word_of(0), Some("a"));
        assert!(matches!(
            build_vocabulary(&c, 3),
            Err(Error::EmptyVocabulary)
        ));
        assert!(build_vocabulary(&c, 0).is_err());
    }

    #[test]
    fn vocabulary_is_deterministic() {
        let a = corpus(&[&["zz", "yy"], &["xx", "yy"]]);
        let b = corpus(&[&["xx", "yy"], &["yy", "zz"]]);
        assert_eq!(
            build_vocabulary(&a, 1).unwrap(),
            build_vocabulary(&b, 1).unwrap()
        );
    }

    fn model_with(words: &[&str], row: &[u32]) -> TopicModel {
        let vocab = Vocabulary::from_words(words.iter().map(|s| s.to_string()).collect()).unwrap();
        TopicModel::from_counts(1, 0.1, 0.01, row.to_vec(), vocab, TrainingMeta::default()).unwrap()
    }

    #[test]
    fn top_words_ranking() {
        let m = model_with(&["a", "b", "c"], &[5, 3, 0]);
        assert_eq!(m.top_words(0, 2).unwrap(), ["a", "b"]);
        assert_eq!(m.top_words(0, 10).unwrap(), ["a", "b", "c"]);
        assert!(m.top_words(1, 1).is_err());
        let tie = model_with(&["a", "b"], &[5, 5]);
        assert_eq!(tie.top_words(0, 1).unwrap(), ["a"]);
    }

    #[test]
    fn topic_totals_derived() {
        let vocab = Vocabulary::from_words(vec!["a".into(), "b".into()]).unwrap();
        let m = TopicModel::from_counts(
            2,
            0.5,
            0.1,
            vec![1, 2, 3, 4],
            vocab,
            TrainingMeta::default(),
        )
        .unwrap();
        assert_eq!(m.topic_total(0), 3);
        assert_eq!(m.topic_total(1), 7);
        let phi = m.topic_word_distribution(1);
        assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![DocTopicDistribution {
            user_id: "u,1".into(),
            theta: vec![0.1, 0.2 + 1e-17, 0.7000000000000001],
        }];
        write_theta_csv(&rows, 3, &p).unwrap();
        assert_eq!(read_theta_csv(&p).unwrap(), rows);
    }
}
