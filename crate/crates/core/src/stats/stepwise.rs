use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::ols::{aic_from_rss, fit_columns};
use super::{FeatureMatrix, LinearModel, RankPolicy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Drop moves only.
    Backward,
    /// Drop and add moves, starting from the full model.
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepwiseOptions {
    pub direction: Direction,
    pub rank_policy: RankPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    Drop(String),
    Add(String),
}

/// Stepwise AIC selection starting from the full model.
///
/// Each step takes the single drop or add that lowers AIC the most and the
/// search stops when no move lowers it. Exact ties prefer a drop over an
/// add, then the lexicographically smallest feature name.
pub fn stepwise_select(
    x: &FeatureMatrix,
    y: &[f64],
    options: StepwiseOptions,
) -> Result<LinearModel> {
    stepwise_path(x, y, options).map(|(m, _)| m)
}

/// Like [`stepwise_select`], also returning the accepted moves with the AIC
/// reached after each.
pub fn stepwise_path(
    x: &FeatureMatrix,
    y: &[f64],
    options: StepwiseOptions,
) -> Result<(LinearModel, Vec<(Move, f64)>)> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let all: Vec<usize> = (0..x.n_cols()).collect();
    let (full, dropped) = fit_columns(x, &all, y, options.rank_policy)?;
    let usable: Vec<usize> = all
        .into_iter()
        .filter(|&c| !dropped.contains(&x.column_names()[c]))
        .collect();
    log::debug!(
        "stepwise: full model with {} features, RSS {}",
        full.fit_stats.p,
        full.fit_stats.rss
    );

    let base = CrossProducts::new(x, &usable, y);
    let names: Vec<&str> = usable
        .iter()
        .map(|&c| x.column_names()[c].as_str())
        .collect();
    let mut in_model = vec![true; usable.len()];
    let mut path = Vec::new();
    loop {
        let swept = base.swept(&in_model);
        let rss = swept.rss();
        let size = in_model.iter().filter(|&&b| b).count();
        let current = aic_from_rss(rss, n, size);

        let mut best: Option<(f64, bool, usize)> = None;
        for j in 0..usable.len() {
            let (candidate_rss, is_add, new_size) = if in_model[j] {
                (rss + swept.drop_increase(j), false, size - 1)
            } else if options.direction == Direction::Both {
                (rss - swept.add_decrease(j), true, size + 1)
            } else {
                continue;
            };
            let score = aic_from_rss(candidate_rss.max(0.0), n, new_size);
            let better = match best {
                None => true,
                Some((b_score, b_add, b_j)) => match score.total_cmp(&b_score) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => (is_add, names[j]) < (b_add, names[b_j]),
                },
            };
            if better {
                best = Some((score, is_add, j));
            }
        }
        match best {
            Some((score, is_add, j)) if score < current => {
                in_model[j] = is_add;
                let name = names[j].to_owned();
                path.push((
                    if is_add {
                        Move::Add(name)
                    } else {
                        Move::Drop(name)
                    },
                    score,
                ));
            }
            _ => break,
        }
    }

    let selected: Vec<usize> = usable
        .iter()
        .zip(&in_model)
        .filter(|(_, &keep)| keep)
        .map(|(&c, _)| c)
        .collect();
    let (model, _) = fit_columns(x, &selected, y, RankPolicy::Fail)?;
    Ok((model, path))
}

/// Cross-product matrix of centred, unit-norm features with the centred
/// response in the last row and column. Centring absorbs the intercept.
struct CrossProducts {
    m: usize,
    a: Vec<f64>,
}

struct Swept {
    m: usize,
    a: Vec<f64>,
}

impl CrossProducts {
    fn new(x: &FeatureMatrix, cols: &[usize], y: &[f64]) -> Self {
        let n = x.n_rows() as f64;
        let mut z: Vec<Vec<f64>> = cols
            .iter()
            .map(|&c| {
                let col = x.column(c);
                let mean = col.iter().sum::<f64>() / n;
                let centred: Vec<f64> = col.iter().map(|v| v - mean).collect();
                let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
                centred.into_iter().map(|v| v / norm).collect()
            })
            .collect();
        let ymean = y.iter().sum::<f64>() / n;
        z.push(y.iter().map(|v| v - ymean).collect());
        let m = z.len();
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let d: f64 = z[i].iter().zip(&z[j]).map(|(p, q)| p * q).sum();
                a[i * m + j] = d;
                a[j * m + i] = d;
            }
        }
        CrossProducts { m, a }
    }

    /// Sweeps every in-model feature, in index order, from the base matrix.
    fn swept(&self, in_model: &[bool]) -> Swept {
        let mut s = Swept {
            m: self.m,
            a: self.a.clone(),
        };
        for (k, _) in in_model.iter().enumerate().filter(|(_, &b)| b) {
            s.sweep(k);
        }
        s
    }
}

impl Swept {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.m + j]
    }

    #[allow(clippy::needless_range_loop)]
    fn sweep(&mut self, k: usize) {
        let m = self.m;
        let d = self.at(k, k);
        let row_k: Vec<f64> = (0..m).map(|j| self.at(k, j)).collect();
        for i in 0..m {
            if i == k {
                continue;
            }
            let aik = self.at(i, k);
            for j in 0..m {
                if j != k {
                    self.a[i * m + j] -= aik * row_k[j] / d;
                }
            }
        }
        for i in 0..m {
            if i != k {
                self.a[i * m + k] /= d;
                self.a[k * m + i] /= d;
            }
        }
        self.a[k * m + k] = -1.0 / d;
    }

    fn rss(&self) -> f64 {
        let y = self.m - 1;
        self.at(y, y)
    }

    /// RSS increase from removing swept feature `j`: b_j^2 / [(X'X)^-1]_jj.
    fn drop_increase(&self, j: usize) -> f64 {
        let y = self.m - 1;
        self.at(j, y).powi(2) / -self.at(j, j)
    }

    /// RSS decrease from adding unswept feature `j`.
    fn add_decrease(&self, j: usize) -> f64 {
        let y = self.m - 1;
        let pivot = self.at(j, j);
        if pivot <= 0.0 {
            return 0.0;
        }
        self.at(j, y).powi(2) / pivot
    }
}
