use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gibbs::{draw, smoothed_theta};
use super::{
    encode_document, DocTopicDistribution, TopicModel, DEFAULT_INFER_BURN_IN,
    DEFAULT_INFER_ITERATIONS,
};
use crate::corpus::UserDocument;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferParams {
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for InferParams {
    fn default() -> Self {
        InferParams {
            iterations: DEFAULT_INFER_ITERATIONS,
            burn_in: DEFAULT_INFER_BURN_IN,
        }
    }
}

/// Estimates topic proportions of a document unseen during training.
///
/// Only the new document's assignments are sampled. Its topic-word
/// conditional uses the frozen model counts plus the document's own current
/// assignments; the model itself is never modified. The returned theta
/// averages (n_dk + alpha) / (n_d + K alpha) over the sweeps after
/// `burn_in`. Out-of-vocabulary tokens are ignored.
pub fn infer(
    model: &TopicModel,
    doc: &UserDocument,
    params: InferParams,
    seed: u64,
) -> Result<DocTopicDistribution> {
    if params.iterations <= params.burn_in {
        return Err(Error::InvalidArgument(format!(
            "inference iterations ({}) must exceed burn-in ({})",
            params.iterations, params.burn_in
        )));
    }
    let ids = encode_document(model.vocabulary(), doc)?;
    let k = model.num_topics();
    let alpha = model.alpha();
    let beta = model.beta();
    let vbeta = model.vocabulary().len() as f64 * beta;

    // local index per distinct word, so own-assignment counts stay small
    let mut local_of: HashMap<u32, usize> = HashMap::new();
    let local: Vec<usize> = ids
        .iter()
        .map(|&w| {
            let next = local_of.len();
            *local_of.entry(w).or_insert(next)
        })
        .collect();
    let mut frozen_wk = vec![0f64; local_of.len() * k];
    for (&w, &l) in &local_of {
        for t in 0..k {
            frozen_wk[l * k + t] = model.topic_word_count(t, w) as f64;
        }
    }
    let frozen_k: Vec<f64> = (0..k).map(|t| model.topic_total(t) as f64).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut own_wk = vec![0u32; local_of.len() * k];
    let mut own_k = vec![0u32; k];
    let mut n_dk = vec![0u32; k];
    let mut z: Vec<usize> = Vec::with_capacity(ids.len());
    for &l in &local {
        let t = rng.random_range(0..k);
        n_dk[t] += 1;
        own_wk[l * k + t] += 1;
        own_k[t] += 1;
        z.push(t);
    }

    let mut weights = vec![0f64; k];
    let mut theta_sum = vec![0f64; k];
    for sweep in 0..params.iterations {
        for (i, &l) in local.iter().enumerate() {
            let old = z[i];
            n_dk[old] -= 1;
            own_wk[l * k + old] -= 1;
            own_k[old] -= 1;

            for (t, wt) in weights.iter_mut().enumerate() {
                let nw = frozen_wk[l * k + t] + own_wk[l * k + t] as f64;
                let nt = frozen_k[t] + own_k[t] as f64;
                *wt = (n_dk[t] as f64 + alpha) * (nw + beta) / (nt + vbeta);
            }
            let new = draw(&weights, rng.random::<f64>());

            n_dk[new] += 1;
            own_wk[l * k + new] += 1;
            own_k[new] += 1;
            z[i] = new;
        }
        if sweep >= params.burn_in {
            for (acc, x) in theta_sum.iter_mut().zip(smoothed_theta(&n_dk, alpha)) {
                *acc += x;
            }
        }
    }
    let samples = (params.iterations - params.burn_in) as f64;
    let mut theta: Vec<f64> = theta_sum.into_iter().map(|s| s / samples).collect();
    // averaging accumulates rounding; renormalise so the sum is 1 to machine precision
    let total: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|x| *x /= total);
    Ok(DocTopicDistribution {
        user_id: doc.user_id.clone(),
        theta,
    })
}
