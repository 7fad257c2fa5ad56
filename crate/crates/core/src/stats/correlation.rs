use statrs::distribution::{ContinuousCDF, StudentsT};

use super::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
}

/// Two-tailed p-value of a t statistic with `df` degrees of freedom.
pub fn student_t_two_tailed_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Sample Pearson correlation with a two-tailed p-value from the exact
/// t distribution with n - 2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs at least 3 points, got {n}"
        )));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    // |r| within rounding of 1 is a perfect fit; the t statistic would blow up
    let p_value = if 1.0 - r.abs() <= 4.0 * f64::EPSILON {
        0.0
    } else {
        student_t_two_tailed_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p_value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSummary {
    /// Columns with p below the significance level.
    pub n_significant: usize,
    /// Largest |r| over the columns with defined correlation; 0 if none.
    pub max_abs_r: f64,
    pub argmax: Option<String>,
    /// Per column, in order; `None` for zero-variance columns.
    pub correlations: Vec<(String, Option<Correlation>)>,
}

/// Correlates every column of `theta` with `y` and counts the columns
/// significant at `alpha_level`. Zero-variance columns are skipped with a
/// warning and count as not significant.
pub fn significant_topic_summary(
    theta: &FeatureMatrix,
    y: &[f64],
    alpha_level: f64,
) -> Result<TopicSummary> {
    if !(alpha_level > 0.0 && alpha_level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "significance level must lie in (0, 1), got {alpha_level}"
        )));
    }
    let mut summary = TopicSummary {
        n_significant: 0,
        max_abs_r: 0.0,
        argmax: None,
        correlations: Vec::with_capacity(theta.n_cols()),
    };
    for (c, name) in theta.column_names().iter().enumerate() {
        let corr = match pearson(&theta.column(c), y) {
            Ok(corr) => Some(corr),
            Err(Error::ZeroVariance(_)) => {
                log::warn!("column `{name}` has zero variance; skipped in correlation summary");
                None
            }
            Err(e) => return Err(e),
        };
        if let Some(corr) = corr {
            if corr.p_value < alpha_level {
                summary.n_significant += 1;
            }
            if summary.argmax.is_none() || corr.r.abs() > summary.max_abs_r {
                summary.max_abs_r = corr.r.abs();
                summary.argmax = Some(name.clone());
            }
        }
        summary.correlations.push((name.clone(), corr));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_correlations() {
        let c = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((c.r - 1.0).abs() < 1e-12);
        assert!(c.p_value < 1e-12);
        let c = pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap();
        assert!((c.r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_example() {
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((c.r - 0.8).abs() < 1e-12);
        // df = 2 has a closed form: p = 1 - |t| / sqrt(t^2 + 2), which
        // reduces to 1 - |r|
        let t = 0.8 * (2.0f64 / 0.36).sqrt();
        assert!((t - 1.8856180831641267).abs() < 1e-12);
        assert!((c.p_value - (1.0 - t / (t * t + 2.0).sqrt())).abs() < 1e-10);
        assert!((c.p_value - 0.2).abs() < 1e-10);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    fn theta(cols: &[Vec<f64>]) -> FeatureMatrix {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect();
        FeatureMatrix::from_rows(
            (0..n).map(|i| i.to_string()).collect(),
            (0..cols.len()).map(|k| format!("topic_{k}")).collect(),
            &rows,
        )
        .unwrap()
    }

    #[test]
    fn degenerate_single_topic() {
        let s =
            significant_topic_summary(&theta(&[vec![1.0; 5]]), &[1.0, 2.0, 3.0, 4.0, 5.0], 0.01)
                .unwrap();
        assert_eq!(s.n_significant, 0);
        assert_eq!(s.max_abs_r, 0.0);
        assert!(s.argmax.is_none());
    }

    #[test]
    fn planted_topic_found() {
        let y: Vec<f64> = (0..40).map(|i| ((i * 7919) % 101) as f64).collect();
        let noise = |i: usize| ((i * 31) % 17) as f64 / 17.0;
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|k| {
                (0..40)
                    .map(|i| {
                        if k == 3 {
                            y[i] / 100.0 + 1e-4 * noise(i)
                        } else {
                            noise(i + k * 5)
                        }
                    })
                    .collect()
            })
            .collect();
        let s = significant_topic_summary(&theta(&cols), &y, 0.01).unwrap();
        assert!(s.n_significant >= 1);
        assert_eq!(s.argmax.as_deref(), Some("topic_3"));
    }

    #[test]
    fn bad_level() {
        assert!(
            significant_topic_summary(&theta(&[vec![1.0, 2.0, 3.0]]), &[1.0, 2.0, 3.0], 1.0)
                .is_err()
        );
    }

    proptest! {
        #[test]
        fn affine_invariance(pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40), a in 0.01f64..100.0, b in -100.0f64..100.0) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let Ok(base) = pearson(&x, &y) else { return Ok(()); };
            let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let moved = pearson(&xt, &y).unwrap();
            prop_assert!((base.r - moved.r).abs() < 1e-12);
        }
    }
}
