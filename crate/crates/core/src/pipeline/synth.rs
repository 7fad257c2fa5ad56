//! Synthetic corpora with planted topics and a planted score signal.
//!
//! Each topic owns a disjoint block of words named `k{topic}w{index}`. A
//! user's topic mixture is drawn from a symmetric Dirichlet, tokens are drawn
//! from the mixture, and the score is
//! `intercept + slope * theta[planted_topic] + N(0, noise_sd)`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::corpus::RawMessage;
use crate::{csvutil, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub tokens_per_user: usize,
    pub messages_per_user: usize,
    /// Symmetric Dirichlet weight for user topic mixtures.
    pub mixture_alpha: f64,
    pub planted_topic: usize,
    pub intercept: f64,
    pub slope: f64,
    pub noise_sd: f64,
    /// Sprinkle mentions, URLs, emoticon codes and retweet chains into the
    /// messages so that cleaning has something to strip.
    pub microblog_noise: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 500,
            topics: 5,
            words_per_topic: 30,
            tokens_per_user: 200,
            messages_per_user: 10,
            mixture_alpha: 0.5,
            planted_topic: 0,
            intercept: 20.0,
            slope: 8.0,
            noise_sd: 2.0,
            microblog_noise: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub messages: Vec<RawMessage>,
    /// Per user, in user order.
    pub user_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub true_theta: Vec<Vec<f64>>,
    /// Words of each planted topic.
    pub topic_words: Vec<Vec<String>>,
}

pub fn topic_word(topic: usize, index: usize) -> String {
    format!("k{topic}w{index:02}")
}

/// Symmetric Dirichlet draw via normalised gamma variates.
fn dirichlet(gamma: &Gamma<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 {
            return g.into_iter().map(|v| v / total).collect();
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.topics == 0 || cfg.words_per_topic == 0 || cfg.users == 0 || cfg.messages_per_user == 0 {
        return Err(Error::InvalidArgument(
            "synthetic corpus dimensions must be positive".into(),
        ));
    }
    if cfg.planted_topic >= cfg.topics {
        return Err(Error::InvalidArgument(format!(
            "planted topic {} out of range for {} topics",
            cfg.planted_topic, cfg.topics
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gamma =
        Gamma::new(cfg.mixture_alpha, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let noise =
        Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let topic_words: Vec<Vec<String>> = (0..cfg.topics)
        .map(|t| (0..cfg.words_per_topic).map(|j| topic_word(t, j)).collect())
        .collect();

    let mut out = SynthCorpus {
        messages: Vec::new(),
        user_ids: Vec::new(),
        scores: Vec::new(),
        true_theta: Vec::new(),
        topic_words,
    };
    for u in 0..cfg.users {
        let user_id = format!("user{u:04}");
        let theta: Vec<f64> = if cfg.topics == 1 {
            vec![1.0]
        } else {
            dirichlet(&gamma, cfg.topics, &mut rng)
        };
        let tokens: Vec<&str> = (0..cfg.tokens_per_user)
            .map(|_| {
                let t = sample_index(&theta, rng.random::<f64>());
                out.topic_words[t][rng.random_range(0..cfg.words_per_topic)].as_str()
            })
            .collect();
        let per = cfg.tokens_per_user.div_ceil(cfg.messages_per_user).max(1);
        for chunk in tokens.chunks(per) {
            let mut text = chunk.join(" ");
            if cfg.microblog_noise {
                match rng.random_range(0..6) {
                    0 => text = format!("@friend{} {text}", rng.random_range(0..50)),
                    1 => text.push_str(" http://t.cn/abc123"),
                    2 => text.push_str(" [哈哈]"),
                    3 => text.push_str(&format!(
                        " //@other{}: {}",
                        rng.random_range(0..50),
                        topic_word(0, 0)
                    )),
                    _ => {}
                }
            }
            out.messages.push(RawMessage {
                user_id: user_id.clone(),
                text,
                is_retweet: false,
            });
        }
        if cfg.microblog_noise && rng.random_range(0..4) == 0 {
            // a pure retweet carries no author text
            out.messages.push(RawMessage {
                user_id: user_id.clone(),
                text: format!("{} {}", topic_word(0, 1), topic_word(0, 2)),
                is_retweet: true,
            });
        }
        out.scores
            .push(cfg.intercept + cfg.slope * theta[cfg.planted_topic] + noise.sample(&mut rng));
        out.user_ids.push(user_id);
        out.true_theta.push(theta);
    }
    Ok(out)
}

fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u * total < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl SynthCorpus {
    pub fn score_map(&self) -> HashMap<String, f64> {
        self.user_ids
            .iter()
            .cloned()
            .zip(self.scores.iter().copied())
            .collect()
    }

    /// Writes `messages.jsonl` and `scores.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("messages.jsonl");
        let mut w = csvutil::create(&path)?;
        for m in &self.messages {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("scores.csv");
        let mut w = csvutil::writer(&path)?;
        w.write_record(["user_id", "score"])?;
        for (id, s) in self.user_ids.iter().zip(&self.scores) {
            w.write_record([id.as_str(), &s.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// A small `.dic` lexicon over the synthetic vocabulary: one category per
/// topic, covering the words whose index starts with digit 0 via a prefix
/// pattern, plus one exact-word category spanning two topics.
pub fn synthetic_lexicon(topics: usize) -> String {
    let mut s = String::from("%\n");
    for t in 0..topics {
        s.push_str(&format!("{}\ttopic{t}words\n", t + 1));
    }
    s.push_str(&format!("{}\tmixed\n%\n", topics + 1));
    for t in 0..topics {
        s.push_str(&format!("k{t}w0*\t{}\n", t + 1));
    }
    s.push_str(&format!("{}\t{}\n", topic_word(0, 15), topics + 1));
    if topics > 1 {
        s.push_str(&format!("{}\t{}\n", topic_word(1, 15), topics + 1));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let cfg = SynthConfig {
            users: 20,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.messages, b.messages);
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.user_ids.len(), 20);
        for th in &a.true_theta {
            assert!((th.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_planted_topic() {
        let cfg = SynthConfig {
            planted_topic: 5,
            ..Default::default()
        };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn lexicon_parses() {
        let lex = crate::lexicon::parse_lexicon(&synthetic_lexicon(3), "synthetic").unwrap();
        assert_eq!(lex.categories().len(), 4);
        assert_eq!(lex.match_token("k1w05").len(), 1);
        assert_eq!(lex.match_token("k1w15").len(), 1);
    }
}
