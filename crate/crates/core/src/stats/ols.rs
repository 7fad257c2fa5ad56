use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::{Error, Result};

/// A column whose component orthogonal to the intercept and the columns
/// before it is below this fraction of its own norm counts as dependent.
const DEPENDENCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankPolicy {
    /// Fail on the first linearly dependent column.
    #[default]
    Fail,
    /// Drop dependent columns (with a warning) and fit the rest.
    DropDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub rss: f64,
    pub n: usize,
    /// Number of non-intercept coefficients.
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    /// In selection order.
    pub coefficients: Vec<(String, f64)>,
    pub fit_stats: FitStats,
}

impl LinearModel {
    pub fn selected_features(&self) -> Vec<&str> {
        self.coefficients.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, b)| b)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        let idx = self
            .coefficients
            .iter()
            .map(|(name, _)| {
                x.column_index(name).ok_or_else(|| {
                    Error::InvalidArgument(format!("prediction input lacks column `{name}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..x.n_rows())
            .map(|r| {
                let row = x.row(r);
                self.intercept
                    + idx
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(&c, (_, b))| b * row[c])
                        .sum::<f64>()
            })
            .collect())
    }

    /// JSON dump: intercept, coefficients by name, selected features in
    /// order, and fit statistics.
    pub fn to_json(&self) -> serde_json::Value {
        let coefficients: BTreeMap<&str, f64> = self
            .coefficients
            .iter()
            .map(|(n, b)| (n.as_str(), *b))
            .collect();
        serde_json::json!({
            "intercept": self.intercept,
            "coefficients": coefficients,
            "selected_features": self.selected_features(),
            "fit_stats": self.fit_stats,
        })
    }
}

/// Akaike information criterion in Gaussian log-likelihood form,
/// n ln(RSS / n) + 2 (p + 2), counting the intercept and the error variance.
/// A perfect fit gives negative infinity.
pub fn aic(model: &LinearModel) -> f64 {
    aic_from_rss(model.fit_stats.rss, model.fit_stats.n, model.fit_stats.p)
}

pub(crate) fn aic_from_rss(rss: f64, n: usize, p: usize) -> f64 {
    if rss <= 0.0 {
        log::warn!("AIC of a perfect fit (RSS = 0) is unbounded below");
        return f64::NEG_INFINITY;
    }
    let n = n as f64;
    n * (rss / n).ln() + 2.0 * (p as f64 + 2.0)
}

/// Least-squares fit with intercept; fails on linearly dependent columns.
pub fn ols_fit(x: &FeatureMatrix, y: &[f64]) -> Result<LinearModel> {
    ols_fit_with(x, y, RankPolicy::Fail).map(|(m, _)| m)
}

/// Least-squares fit with intercept by Householder QR. Returns the model and
/// the names of any columns dropped under [`RankPolicy::DropDependent`].
pub fn ols_fit_with(
    x: &FeatureMatrix,
    y: &[f64],
    policy: RankPolicy,
) -> Result<(LinearModel, Vec<String>)> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let cols: Vec<usize> = (0..x.n_cols()).collect();
    fit_columns(x, &cols, y, policy)
}

/// Fits on a subset of the columns of `x` (by index, in the given order).
pub(crate) fn fit_columns(
    x: &FeatureMatrix,
    cols: &[usize],
    y: &[f64],
    policy: RankPolicy,
) -> Result<(LinearModel, Vec<String>)> {
    let n = x.n_rows();
    if n < cols.len() + 2 {
        return Err(Error::InvalidArgument(format!(
            "OLS needs n > p + 1, got n = {n}, p = {}",
            cols.len()
        )));
    }
    let mut qr = IncrementalQr::new(n);
    qr.push(&vec![1.0; n]);
    let mut kept = Vec::with_capacity(cols.len());
    let mut dropped = Vec::new();
    for &c in cols {
        if qr.push(&x.column(c)) {
            kept.push(c);
            continue;
        }
        let name = x.column_names()[c].clone();
        match policy {
            RankPolicy::Fail => return Err(Error::RankDeficient { column: name }),
            RankPolicy::DropDependent => {
                log::debug!("dropping linearly dependent column `{name}`");
                dropped.push(name);
            }
        }
    }
    let beta = if kept.is_empty() {
        vec![y.iter().sum::<f64>() / n as f64]
    } else {
        qr.solve(y)
    };
    let intercept = beta[0];
    let coefficients: Vec<(String, f64)> = kept
        .iter()
        .zip(&beta[1..])
        .map(|(&c, &b)| (x.column_names()[c].clone(), b))
        .collect();
    let rss = (0..n)
        .map(|r| {
            let row = x.row(r);
            let fit = intercept
                + kept
                    .iter()
                    .zip(&beta[1..])
                    .map(|(&c, b)| b * row[c])
                    .sum::<f64>();
            (y[r] - fit).powi(2)
        })
        .sum();
    let model = LinearModel {
        intercept,
        fit_stats: FitStats {
            rss,
            n,
            p: coefficients.len(),
        },
        coefficients,
    };
    Ok((model, dropped))
}

/// Householder QR built one column at a time, rejecting columns that are
/// numerically dependent on those already accepted.
struct IncrementalQr {
    n: usize,
    /// Unit Householder vectors; reflector j acts on rows j..n.
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular R, stored by column.
    r: Vec<Vec<f64>>,
}

impl IncrementalQr {
    fn new(n: usize) -> Self {
        IncrementalQr {
            n,
            reflectors: Vec::new(),
            r: Vec::new(),
        }
    }

    fn reflect(&self, a: &mut [f64]) {
        for (j, v) in self.reflectors.iter().enumerate() {
            let tail = &mut a[j..];
            let dot: f64 = v.iter().zip(tail.iter()).map(|(vi, ai)| vi * ai).sum();
            for (ai, vi) in tail.iter_mut().zip(v) {
                *ai -= 2.0 * dot * vi;
            }
        }
    }

    /// Adds a column; returns false (leaving the factorisation unchanged) if
    /// it is dependent on the accepted columns.
    fn push(&mut self, column: &[f64]) -> bool {
        let rank = self.reflectors.len();
        let norm = column.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rank == self.n || norm == 0.0 {
            return false;
        }
        let mut a = column.to_vec();
        self.reflect(&mut a);
        let tail_norm = a[rank..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if tail_norm <= DEPENDENCE_TOLERANCE * norm {
            return false;
        }
        let alpha = if a[rank] > 0.0 { -tail_norm } else { tail_norm };
        let mut v = a[rank..].to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= vnorm);
        let mut rcol = a[..rank].to_vec();
        rcol.push(alpha);
        self.reflectors.push(v);
        self.r.push(rcol);
        true
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.reflect(&mut qty);
        let m = self.r.len();
        let mut beta = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = qty[i];
            for j in i + 1..m {
                s -= self.r[j][i] * beta[j];
            }
            beta[i] = s / self.r[i][i];
        }
        beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(xs: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(
            (0..xs.len()).map(|i| i.to_string()).collect(),
            vec!["x".into()],
            xs.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let m = ols_fit(&single(&[1.0, 2.0, 3.0]), &[2.0, 4.0, 6.0]).unwrap();
        assert!(m.intercept.abs() < 1e-8);
        assert!((m.coefficient("x").unwrap() - 2.0).abs() < 1e-8);
        assert!(m.fit_stats.rss < 1e-20);
    }

    #[test]
    fn constant_target() {
        let m = ols_fit(&single(&[1.0, 2.0, 3.0]), &[1.0, 1.0, 1.0]).unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-8);
        assert!(m.coefficient("x").unwrap().abs() < 1e-8);
    }

    #[test]
    fn collinear_columns() {
        let x = FeatureMatrix::from_rows(
            (0..5).map(|i| i.to_string()).collect(),
            vec!["a".into(), "b".into()],
            &[
                vec![1.0, 2.0],
                vec![2.0, 4.0],
                vec![3.0, 6.0],
                vec![5.0, 10.0],
                vec![7.0, 14.0],
            ],
        )
        .unwrap();
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        assert!(matches!(ols_fit(&x, &y), Err(Error::RankDeficient { column }) if column == "b"));
        let (m, dropped) = ols_fit_with(&x, &y, RankPolicy::DropDependent).unwrap();
        assert_eq!(dropped, vec!["b".to_string()]);
        assert_eq!(m.selected_features(), vec!["a"]);
    }

    #[test]
    fn constant_column_is_dependent_on_intercept() {
        let x = single(&[4.0, 4.0, 4.0, 4.0]);
        assert!(matches!(
            ols_fit(&x, &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        assert!(ols_fit(&single(&[1.0, 2.0]), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn aic_formula() {
        let m = LinearModel {
            intercept: 0.0,
            coefficients: vec![("x".into(), 1.0)],
            fit_stats: FitStats {
                rss: 10.0,
                n: 10,
                p: 1,
            },
        };
        assert!((aic(&m) - 6.0).abs() < 1e-12);
        assert!(aic_from_rss(10.0, 10, 2) > aic(&m));
        assert_eq!(aic_from_rss(0.0, 10, 1), f64::NEG_INFINITY);
    }

    #[test]
    fn predict_by_name() {
        let m = ols_fit(&single(&[1.0, 2.0, 3.0]), &[3.0, 5.0, 7.0]).unwrap();
        let p = m.predict(&single(&[10.0])).unwrap();
        assert!((p[0] - 21.0).abs() < 1e-9);
        let other = FeatureMatrix::new(vec!["r".into()], vec!["z".into()], vec![1.0]).unwrap();
        assert!(m.predict(&other).is_err());
        assert_eq!(m.to_json()["selected_features"][0], "x");
    }

    proptest! {
        #[test]
        fn residuals_orthogonal(rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 4), 8..30)) {
            let n = rows.len();
            let x = FeatureMatrix::from_rows(
                (0..n).map(|i| i.to_string()).collect(),
                vec!["a".into(), "b".into(), "c".into()],
                &rows.iter().map(|r| r[..3].to_vec()).collect::<Vec<_>>(),
            ).unwrap();
            let y: Vec<f64> = rows.iter().map(|r| r[3]).collect();
            let Ok(m) = ols_fit(&x, &y) else { return Ok(()); };
            let pred = m.predict(&x).unwrap();
            let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
            let scale = y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            prop_assert!(resid.iter().sum::<f64>().abs() < 1e-6 * scale * (n as f64).sqrt());
            for c in 0..3 {
                let col = x.column(c);
                let cn = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dot: f64 = col.iter().zip(&resid).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() < 1e-6 * scale * cn.max(1.0));
            }
        }
    }
}
