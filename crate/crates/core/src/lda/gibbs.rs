use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    encode_document, DocTopicDistribution, TopicModel, TrainingMeta, Vocabulary, DEFAULT_ALPHA_SUM,
    DEFAULT_BETA, DEFAULT_TRAIN_ITERATIONS,
};
use crate::corpus::Corpus;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
}

impl TrainParams {
    /// Symmetric alpha = 5 / K, beta = 0.01, 1000 sweeps.
    pub fn with_defaults(k: usize) -> Self {
        TrainParams {
            k,
            alpha: DEFAULT_ALPHA_SUM / k.max(1) as f64,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_TRAIN_ITERATIONS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "iterations must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be positive, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler state over a fixed set of encoded documents.
///
/// Random numbers are drawn from a single ChaCha8 stream in a fixed order:
/// initial assignments document by document and token by token, then one
/// uniform per token per sweep in the same order.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    /// D x K
    n_dk: Vec<u32>,
    /// V x K (word-major so one token's conditional reads a contiguous row)
    n_wk: Vec<u32>,
    n_k: Vec<u64>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Starts a chain with uniformly random assignments. Word ids must be
    /// below `vocab_size`.
    pub fn new(
        docs: Vec<Vec<u32>>,
        vocab_size: usize,
        k: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Self {
        assert!(k >= 1, "K must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n_dk = vec![0u32; docs.len() * k];
        let mut n_wk = vec![0u32; vocab_size * k];
        let mut n_k = vec![0u64; k];
        let mut z = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &w in doc {
                assert!((w as usize) < vocab_size, "word id {w} outside vocabulary");
                let t = rng.random_range(0..k);
                n_dk[d * k + t] += 1;
                n_wk[w as usize * k + t] += 1;
                n_k[t] += 1;
                zd.push(t as u32);
            }
            z.push(zd);
        }
        GibbsSampler {
            k,
            v: vocab_size,
            alpha,
            beta,
            docs,
            z,
            n_dk,
            n_wk,
            n_k,
            rng,
            weights: vec![0.0; k],
        }
    }

    /// Resamples every token once, conditioning on all other assignments:
    /// p(z = t) is proportional to (n_dt + alpha)(n_tw + beta) / (n_t + V beta),
    /// with the token itself removed from the counts.
    pub fn sweep(&mut self) {
        let k = self.k;
        let vbeta = self.v as f64 * self.beta;
        let mut inv_nk: Vec<f64> = self.n_k.iter().map(|&n| 1.0 / (n as f64 + vbeta)).collect();
        for d in 0..self.docs.len() {
            let ndk = &mut self.n_dk[d * k..(d + 1) * k];
            for (i, &w) in self.docs[d].iter().enumerate() {
                let old = self.z[d][i] as usize;
                let nwk = &mut self.n_wk[w as usize * k..(w as usize + 1) * k];
                ndk[old] -= 1;
                nwk[old] -= 1;
                self.n_k[old] -= 1;

                inv_nk[old] = 1.0 / (self.n_k[old] as f64 + vbeta);

                for (((wt, &a), &b), &c) in self
                    .weights
                    .iter_mut()
                    .zip(ndk.iter())
                    .zip(nwk.iter())
                    .zip(&inv_nk)
                {
                    *wt = (a as f64 + self.alpha) * (b as f64 + self.beta) * c;
                }
                let new = draw(&self.weights, self.rng.random::<f64>());

                ndk[new] += 1;
                nwk[new] += 1;
                self.n_k[new] += 1;
                inv_nk[new] = 1.0 / (self.n_k[new] as f64 + vbeta);
                self.z[d][i] = new as u32;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    pub fn doc_topic_counts(&self, doc: usize) -> &[u32] {
        &self.n_dk[doc * self.k..(doc + 1) * self.k]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.n_k
    }

    /// (n_dk + alpha) / (n_d + K alpha) from the current state.
    pub fn theta(&self, doc: usize) -> Vec<f64> {
        smoothed_theta(self.doc_topic_counts(doc), self.alpha)
    }

    /// Recomputes every count from the assignments and compares; used to
    /// check the conservation invariants.
    pub fn counts_consistent(&self) -> bool {
        let k = self.k;
        let mut n_dk = vec![0u32; self.n_dk.len()];
        let mut n_wk = vec![0u32; self.n_wk.len()];
        let mut n_k = vec![0u64; k];
        for (d, (doc, zd)) in self.docs.iter().zip(&self.z).enumerate() {
            for (&w, &t) in doc.iter().zip(zd) {
                n_dk[d * k + t as usize] += 1;
                n_wk[w as usize * k + t as usize] += 1;
                n_k[t as usize] += 1;
            }
        }
        n_dk == self.n_dk && n_wk == self.n_wk && n_k == self.n_k
    }

    /// Topic-word counts in row-major K x V layout.
    pub fn topic_word_counts(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.k * self.v];
        for w in 0..self.v {
            for t in 0..self.k {
                out[t * self.v + w] = self.n_wk[w * self.k + t];
            }
        }
        out
    }
}

/// Index drawn from unnormalised `weights` given a uniform `u` in [0, 1).
pub(crate) fn draw(weights: &[f64], u: f64) -> usize {
    let mut acc = [0.0f64; 4];
    let chunks = weights.chunks_exact(4);
    let tail: f64 = chunks.remainder().iter().sum();
    for c in chunks {
        for j in 0..4 {
            acc[j] += c[j];
        }
    }
    let total = acc[0] + acc[1] + acc[2] + acc[3] + tail;
    let mut rest = u * total;
    for (t, &w) in weights.iter().enumerate() {
        rest -= w;
        if rest < 0.0 {
            return t;
        }
    }
    // rounding left a sliver past the end
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(weights.len() - 1)
}

pub(crate) fn smoothed_theta(counts: &[u32], alpha: f64) -> Vec<f64> {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    let denom = n as f64 + counts.len() as f64 * alpha;
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

/// Fits a topic model to `corpus` restricted to `vocabulary`.
///
/// Returns the frozen model and, per document in corpus order, the smoothed
/// topic proportions from the final sweep.
pub fn train(
    corpus: &Corpus,
    vocabulary: Vocabulary,
    params: &TrainParams,
    seed: u64,
) -> Result<(TopicModel, Vec<DocTopicDistribution>)> {
    params.validate()?;
    let docs = corpus
        .documents
        .iter()
        .map(|d| encode_document(&vocabulary, d))
        .collect::<Result<Vec<_>>>()?;
    let mut sampler = GibbsSampler::new(
        docs,
        vocabulary.len(),
        params.k,
        params.alpha,
        params.beta,
        seed,
    );
    for it in 0..params.iterations {
        sampler.sweep();
        if (it + 1) % 100 == 0 {
            log::debug!("lda K={} sweep {}/{}", params.k, it + 1, params.iterations);
        }
    }
    debug_assert!(sampler.counts_consistent());
    let thetas = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(d, doc)| DocTopicDistribution {
            user_id: doc.user_id.clone(),
            theta: sampler.theta(d),
        })
        .collect();
    let model = TopicModel::from_counts(
        params.k,
        params.alpha,
        params.beta,
        sampler.topic_word_counts(),
        vocabulary,
        TrainingMeta {
            iterations: params.iterations,
            seed,
            provenance: corpus.provenance.clone(),
        },
    )?;
    Ok((model, thetas))
}
