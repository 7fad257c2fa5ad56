//! Raw message ingestion, cleaning, segmentation and per-user aggregation.

mod clean;
mod io;
mod segment;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use clean::{clean_message, clean_text, CleanConfig};
pub use io::{read_corpus_jsonl, read_messages_jsonl, read_scores_csv, write_corpus_jsonl};
pub use segment::{read_word_list, Segmenter, SegmenterConfig, SegmenterMode};

use crate::{Error, Result};

/// Byte threshold corresponding to "20KB".
pub const DEFAULT_MIN_BYTES: usize = 20 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMessage {
    pub user_id: String,
    pub text: String,
    #[serde(default)]
    pub is_retweet: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDocument {
    pub user_id: String,
    pub tokens: Vec<String>,
    /// UTF-8 byte count of the user's cleaned text, summed over messages.
    pub raw_byte_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub documents: Vec<UserDocument>,
    pub provenance: String,
}

impl Corpus {
    pub fn new(documents: Vec<UserDocument>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.user_id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate user_id `{}` in corpus",
                    d.user_id
                )));
            }
        }
        Ok(Corpus {
            documents,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    fn note(&mut self, step: &str) {
        if self.provenance.is_empty() {
            self.provenance = step.to_owned();
        } else {
            self.provenance.push_str("; ");
            self.provenance.push_str(step);
        }
    }

    /// Sets each document's score from `scores`; users absent from the map
    /// keep whatever score they had.
    pub fn attach_scores(&mut self, scores: &HashMap<String, f64>) {
        let mut matched = 0;
        for d in &mut self.documents {
            if let Some(&s) = scores.get(&d.user_id) {
                d.score = Some(s);
                matched += 1;
            }
        }
        self.note(&format!("scores attached to {matched} users"));
    }

    /// Scores of every document, failing if any is missing.
    pub fn scores(&self) -> Result<Vec<f64>> {
        self.documents
            .iter()
            .map(|d| {
                d.score.ok_or_else(|| {
                    Error::InvalidArgument(format!("document `{}` has no score", d.user_id))
                })
            })
            .collect()
    }
}

/// Drops stopwords and single-character tokens (counted in Unicode scalar
/// values), keeping order.
pub fn filter_tokens(tokens: Vec<String>, stopwords: &HashSet<String>) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| {
            let mut chars = t.chars();
            let long_enough = chars.next().is_some() && chars.next().is_some();
            long_enough && !stopwords.contains(t)
        })
        .collect()
}

/// Everything needed to turn one raw message into filtered tokens.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub clean: CleanConfig,
    pub segmenter: Segmenter,
    pub stopwords: HashSet<String>,
}

impl Preprocessor {
    pub fn new(clean: CleanConfig, segmenter: Segmenter, stopwords: HashSet<String>) -> Self {
        Preprocessor {
            clean,
            segmenter,
            stopwords,
        }
    }

    pub fn from_config(clean: CleanConfig, config: &SegmenterConfig) -> Result<Self> {
        let segmenter = Segmenter::from_config(config)?;
        let stopwords = match &config.stopword_path {
            Some(p) => read_word_list(p)?.into_iter().collect(),
            None => HashSet::new(),
        };
        Ok(Self::new(clean, segmenter, stopwords))
    }

    /// Returns the cleaned text and its filtered tokens.
    pub fn process(&self, raw: &RawMessage) -> (String, Vec<String>) {
        let cleaned = clean_message(raw, &self.clean);
        let tokens = filter_tokens(self.segmenter.segment(&cleaned), &self.stopwords);
        (cleaned, tokens)
    }
}

/// Folds messages into one document per user, in order of first appearance.
pub fn aggregate_users(messages: &[RawMessage], pre: &Preprocessor) -> Corpus {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut documents: Vec<UserDocument> = Vec::new();
    for m in messages {
        let slot = *index.entry(m.user_id.as_str()).or_insert_with(|| {
            documents.push(UserDocument {
                user_id: m.user_id.clone(),
                tokens: Vec::new(),
                raw_byte_length: 0,
                score: None,
            });
            documents.len() - 1
        });
        let (cleaned, tokens) = pre.process(m);
        let doc = &mut documents[slot];
        doc.raw_byte_length += cleaned.len();
        doc.tokens.extend(tokens);
    }
    Corpus {
        provenance: format!(
            "{} messages aggregated into {} users",
            messages.len(),
            documents.len()
        ),
        documents,
    }
}

/// Drops documents with fewer than `min_bytes` bytes of cleaned text and,
/// when `require_score` is set, documents without a score.
pub fn filter_users(mut corpus: Corpus, min_bytes: usize, require_score: bool) -> Corpus {
    let before = corpus.len();
    corpus
        .documents
        .retain(|d| d.raw_byte_length >= min_bytes && (!require_score || d.score.is_some()));
    let after = corpus.len();
    corpus.note(&format!(
        "filter_users(min_bytes={min_bytes}, require_score={require_score}): {before} -> {after}"
    ));
    corpus
}

/// Documents whose score is strictly above mean + one sample standard
/// deviation of the corpus scores.
pub fn high_risk_subset(corpus: &Corpus) -> Result<Corpus> {
    if corpus.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "high-risk subset needs at least 2 documents, got {}",
            corpus.len()
        )));
    }
    let scores = corpus.scores()?;
    let threshold = high_risk_threshold(&scores);
    let documents: Vec<UserDocument> = corpus
        .documents
        .iter()
        .filter(|d| d.score.is_some_and(|s| s > threshold))
        .cloned()
        .collect();
    let mut out = Corpus {
        documents,
        provenance: corpus.provenance.clone(),
    };
    out.note(&format!("high-risk subset (score > {threshold})"));
    Ok(out)
}

/// mean + sample SD; `scores` must have at least two entries.
pub fn high_risk_threshold(scores: &[f64]) -> f64 {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    mean + var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn doc(id: &str, bytes: usize, score: Option<f64>) -> UserDocument {
        UserDocument {
            user_id: id.into(),
            tokens: vec![],
            raw_byte_length: bytes,
            score,
        }
    }

    fn msg(user: &str, text: &str) -> RawMessage {
        RawMessage {
            user_id: user.into(),
            text: text.into(),
            is_retweet: false,
        }
    }

    fn pre_segmented() -> Preprocessor {
        Preprocessor::new(
            CleanConfig::default(),
            Segmenter::PreSegmented,
            HashSet::new(),
        )
    }

    #[test]
    fn filter_tokens_examples() {
        let stop: HashSet<String> = ["我".to_string()].into();
        assert_eq!(
            filter_tokens(toks(&["我", "中国", "好"]), &stop),
            toks(&["中国"])
        );
        assert!(filter_tokens(vec![], &stop).is_empty());
        assert_eq!(
            filter_tokens(toks(&["人民", "人民"]), &HashSet::new()),
            toks(&["人民", "人民"])
        );
    }

    #[test]
    fn aggregate_groups_by_user() {
        let msgs = [msg("A", "ab cd"), msg("B", "ef"), msg("A", "gh")];
        let c = aggregate_users(&msgs, &pre_segmented());
        assert_eq!(c.len(), 2);
        assert_eq!(c.documents[0].user_id, "A");
        assert_eq!(c.documents[0].tokens, toks(&["ab", "cd", "gh"]));
    }

    #[test]
    fn aggregate_keeps_empty_users() {
        let msgs = [msg("A", "http://t.cn/x"), msg("A", "")];
        let c = aggregate_users(&msgs, &pre_segmented());
        assert_eq!(c.len(), 1);
        assert!(c.documents[0].tokens.is_empty());
        assert_eq!(c.documents[0].raw_byte_length, 0);
    }

    #[test]
    fn aggregate_sums_cleaned_bytes() {
        let msgs = [
            msg("A", &"x".repeat(10)),
            msg("A", &"y".repeat(20)),
            msg("A", &"z".repeat(30)),
        ];
        let c = aggregate_users(&msgs, &pre_segmented());
        assert_eq!(c.documents[0].raw_byte_length, 60);
    }

    #[test]
    fn filter_users_threshold() {
        let c = Corpus::new(vec![doc("a", 20479, Some(1.0))], "").unwrap();
        assert!(filter_users(c, DEFAULT_MIN_BYTES, false).is_empty());

        let c = Corpus::new(
            vec![
                doc("a", 10000, None),
                doc("b", 20480, None),
                doc("c", 30000, Some(2.0)),
            ],
            "",
        )
        .unwrap();
        assert_eq!(filter_users(c.clone(), 20480, false).len(), 2);
        assert_eq!(filter_users(c.clone(), 0, false).documents, c.documents);
        assert_eq!(filter_users(c, 0, true).len(), 1);
    }

    #[test]
    fn duplicate_user_ids_rejected() {
        assert!(Corpus::new(vec![doc("a", 1, None), doc("a", 2, None)], "").is_err());
    }

    fn scored(scores: &[f64]) -> Corpus {
        let docs = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| doc(&format!("u{i}"), 0, Some(s)))
            .collect();
        Corpus::new(docs, "").unwrap()
    }

    #[test]
    fn high_risk_examples() {
        let t = high_risk_threshold(&[1.0, 1.0, 1.0, 1.0, 10.0]);
        assert!((t - 6.824922359499621).abs() < 1e-9, "{t}");
        let hr = high_risk_subset(&scored(&[1.0, 1.0, 1.0, 1.0, 10.0])).unwrap();
        assert_eq!(hr.len(), 1);
        assert_eq!(hr.documents[0].score, Some(10.0));

        assert!(high_risk_subset(&scored(&[3.0; 4])).unwrap().is_empty());
        assert!(high_risk_subset(&scored(&[0.0, 10.0])).unwrap().is_empty());
    }

    #[test]
    fn high_risk_errors() {
        assert!(high_risk_subset(&scored(&[1.0])).is_err());
        let c = Corpus::new(vec![doc("a", 0, Some(1.0)), doc("b", 0, None)], "").unwrap();
        assert!(high_risk_subset(&c).is_err());
    }

    proptest! {
        #[test]
        fn filter_tokens_idempotent(tokens in prop::collection::vec("[a-c我]{0,3}", 0..20)) {
            let stop: HashSet<String> = ["ab".to_string()].into();
            let once = filter_tokens(tokens, &stop);
            prop_assert_eq!(filter_tokens(once.clone(), &stop), once);
        }

        #[test]
        fn filter_users_monotone(bytes in prop::collection::vec(0usize..100, 0..20), lo in 0usize..100, hi in 0usize..100) {
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let docs = bytes.iter().enumerate().map(|(i, &b)| doc(&i.to_string(), b, None)).collect();
            let c = Corpus::new(docs, "").unwrap();
            let small: HashSet<String> = filter_users(c.clone(), lo, false).documents.into_iter().map(|d| d.user_id).collect();
            let big = filter_users(c, hi, false);
            prop_assert!(big.documents.iter().all(|d| small.contains(&d.user_id)));
        }

        #[test]
        fn high_risk_is_subset_above_threshold(scores in prop::collection::vec(-50.0f64..50.0, 2..30)) {
            let c = scored(&scores);
            let t = high_risk_threshold(&scores);
            let hr = high_risk_subset(&c).unwrap();
            prop_assert!(hr.len() <= c.len());
            prop_assert!(hr.documents.iter().all(|d| d.score.unwrap() > t && c.documents.contains(d)));
        }

        #[test]
        fn two_point_high_risk_empty(a in -100.0f64..100.0, gap in 0.001f64..100.0) {
            prop_assert!(high_risk_subset(&scored(&[a, a + gap])).unwrap().is_empty());
        }

        #[test]
        fn aggregation_preserves_token_count(texts in prop::collection::vec(("[AB]", "[a-z ]{0,20}"), 0..15)) {
            let pre = pre_segmented();
            let msgs: Vec<RawMessage> = texts.iter().map(|(u, t)| msg(u, t)).collect();
            let per_message: usize = msgs.iter().map(|m| pre.process(m).1.len()).sum();
            prop_assert_eq!(aggregate_users(&msgs, &pre).total_tokens(), per_message);
        }
    }
}
