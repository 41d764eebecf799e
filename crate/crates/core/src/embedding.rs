//! Delay embedding and sliding-window point clouds.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{check_aligned, ReturnSeries};

/// Embedding dimension, delay (in observations) and cloud size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub d: usize,
    pub tau: usize,
    pub w: usize,
}

impl EmbeddingConfig {
    pub fn new(d: usize, tau: usize, w: usize) -> Result<Self> {
        let cfg = EmbeddingConfig { d, tau, w };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.tau < 1 || self.w < 2 {
            return Err(Error::InvalidParameter(format!(
                "need d >= 1, tau >= 1, w >= 2 (got d={}, tau={}, w={})",
                self.d, self.tau, self.w
            )));
        }
        Ok(())
    }

    /// Observations consumed before the first cloud is complete.
    pub fn span(&self) -> usize {
        self.tau * (self.d - 1) + self.w
    }
}

/// Delay vectors together with the date of the last observation each uses.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayEmbedding {
    pub points: Vec<Vec<f64>>,
    pub dates: Vec<NaiveDate>,
}

/// An ordered multiset of points in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    /// Date of the last observation contributing to the cloud.
    pub anchor_date: NaiveDate,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// Point `t` is `(x_t, x_{t+tau}, ..., x_{t+tau(d-1)})`.
pub fn takens_embed(x: &ReturnSeries, d: usize, tau: usize) -> Result<DelayEmbedding> {
    if d < 1 || tau < 1 {
        return Err(Error::InvalidParameter(format!("d={d}, tau={tau} must be positive")));
    }
    let reach = tau * (d - 1);
    let need = reach + 1;
    if x.len() < need {
        return Err(Error::SeriesTooShort { have: x.len(), need });
    }
    let count = x.len() - reach;
    let points = (0..count)
        .map(|t| (0..d).map(|j| x.values[t + j * tau]).collect())
        .collect();
    let dates = x.dates[reach..].to_vec();
    Ok(DelayEmbedding { points, dates })
}

/// Cloud `t` holds points `t..t+w`; consecutive clouds overlap in `w-1` points.
pub fn sliding_clouds(e: &DelayEmbedding, w: usize) -> Result<Vec<PointCloud>> {
    if w < 2 {
        return Err(Error::InvalidParameter(format!("window {w} must be at least 2")));
    }
    if e.points.len() < w {
        return Err(Error::TooFewPoints { have: e.points.len(), window: w });
    }
    Ok((0..=e.points.len() - w)
        .map(|t| PointCloud { points: e.points[t..t + w].to_vec(), anchor_date: e.dates[t + w - 1] })
        .collect())
}

/// Stacks `k` date-aligned series into points of R^k and windows them.
pub fn multiasset_clouds(series: &[ReturnSeries], w: usize) -> Result<Vec<PointCloud>> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "multi-asset clouds need at least 2 series, got {}",
            series.len()
        )));
    }
    check_aligned(series)?;
    let n = series[0].len();
    let points = (0..n).map(|t| series.iter().map(|s| s.values[t]).collect()).collect();
    sliding_clouds(&DelayEmbedding { points, dates: series[0].dates.clone() }, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: &[f64]) -> ReturnSeries {
        ReturnSeries::from_values("x", values.to_vec())
    }

    #[test]
    fn embed_examples() {
        let s = series(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            takens_embed(&s, 2, 1).unwrap().points,
            vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]]
        );
        assert_eq!(takens_embed(&s, 2, 2).unwrap().points, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!(takens_embed(&s, 3, 2).unwrap_err(), Error::SeriesTooShort { have: 4, need: 5 });
    }

    #[test]
    fn window_counts() {
        let e = takens_embed(&series(&[0.0; 5]), 1, 1).unwrap();
        assert_eq!(sliding_clouds(&e, 5).unwrap().len(), 1);
        let e6 = takens_embed(&series(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]), 1, 1).unwrap();
        let c = sliding_clouds(&e6, 5).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].points[1..], c[1].points[..4]);
        let e50 = takens_embed(&series(&[0.0; 50]), 1, 1).unwrap();
        assert_eq!(sliding_clouds(&e50, 30).unwrap().len(), 21);
        assert_eq!(sliding_clouds(&e, 6).unwrap_err(), Error::TooFewPoints { have: 5, window: 6 });
    }

    #[test]
    fn multiasset() {
        let zero = series(&[0.0; 5]);
        let clouds = multiasset_clouds(&[zero.clone(), zero.clone()], 3).unwrap();
        assert_eq!(clouds.len(), 3);
        assert!(clouds.iter().all(|c| c.points.iter().all(|p| p == &vec![0.0, 0.0])));

        let four: Vec<_> = (0..4).map(|k| series(&vec![k as f64; 60])).collect();
        let clouds = multiasset_clouds(&four, 50).unwrap();
        assert_eq!(clouds[0].len(), 50);
        assert_eq!(clouds[0].dim(), 4);
        assert_eq!(clouds[0].points[0], vec![0.0, 1.0, 2.0, 3.0]);

        let mut shifted = zero.clone();
        shifted.dates[2] = shifted.dates[2] + chrono::Days::new(30);
        assert_eq!(
            multiasset_clouds(&[zero.clone(), shifted], 3).unwrap_err(),
            Error::DateMisalignment(zero.dates[2])
        );
    }

    proptest! {
        #[test]
        fn anchor_dates_and_counts(n in 2usize..80, d in 1usize..5, tau in 1usize..4, w in 2usize..10) {
            let s = series(&(0..n).map(|i| i as f64).collect::<Vec<_>>());
            let cfg = EmbeddingConfig { d, tau, w };
            prop_assume!(n >= cfg.span());
            let e = takens_embed(&s, d, tau).unwrap();
            prop_assert_eq!(e.points.len(), n - tau * (d - 1));
            let clouds = sliding_clouds(&e, w).unwrap();
            for (t, c) in clouds.iter().enumerate() {
                prop_assert_eq!(c.anchor_date, s.dates[t + tau * (d - 1) + w - 1]);
                prop_assert_eq!(c.points[0][0], t as f64);
            }
        }

        #[test]
        fn translation_equivariance(values in prop::collection::vec(-1.0f64..1.0, 10..30), c in -5.0f64..5.0) {
            let a = takens_embed(&series(&values), 3, 2).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
            let b = takens_embed(&series(&shifted), 3, 2).unwrap();
            for (p, q) in a.points.iter().zip(&b.points) {
                for (x, y) in p.iter().zip(q) {
                    prop_assert!((x + c - y).abs() < 1e-12);
                }
            }
        }
    }
}
