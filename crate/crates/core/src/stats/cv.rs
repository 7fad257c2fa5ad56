use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FeatureMatrix, LinearModel};
use crate::{Error, Result};

/// Root mean squared difference.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument("rmse of empty vectors".into()));
    }
    let mse = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).powi(2))
        .sum::<f64>()
        / predicted.len() as f64;
    Ok(mse.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CVResult {
    pub fold_rmses: Vec<f64>,
    pub mean_rmse: f64,
    pub k: usize,
    pub seed: u64,
}

/// Row indices of each fold: a seeded shuffle dealt round-robin, so fold
/// sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} rows into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (i, row) in order.into_iter().enumerate() {
        folds[i % k].push(row);
    }
    Ok(folds)
}

/// k-fold cross-validation. `fit` sees only the training rows of each fold,
/// so any feature selection it does is repeated per fold.
pub fn kfold_cv<F>(x: &FeatureMatrix, y: &[f64], k: usize, seed: u64, fit: F) -> Result<CVResult>
where
    F: Fn(&FeatureMatrix, &[f64]) -> Result<LinearModel> + Sync,
{
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let folds = fold_assignment(n, k, seed)?;
    let fold_rmses = folds
        .par_iter()
        .map(|held_out| {
            let mut is_test = vec![false; n];
            held_out.iter().for_each(|&r| is_test[r] = true);
            let train: Vec<usize> = (0..n).filter(|&r| !is_test[r]).collect();
            let x_train = x.select_rows(&train)?;
            let y_train: Vec<f64> = train.iter().map(|&r| y[r]).collect();
            let model = fit(&x_train, &y_train)?;
            let predicted = model.predict(&x.select_rows(held_out)?)?;
            let actual: Vec<f64> = held_out.iter().map(|&r| y[r]).collect();
            rmse(&predicted, &actual)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_rmse = fold_rmses.iter().sum::<f64>() / k as f64;
    Ok(CVResult {
        fold_rmses,
        mean_rmse,
        k,
        seed,
    })
}
