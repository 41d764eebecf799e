//! Shape analysis of index families and early-warning classification.

use std::collections::BTreeSet;
use std::io::{self, Write};

use chrono::NaiveDate;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::embedding::{sliding_clouds, takens_embed};
use crate::error::{Error, Result};
use crate::indices::{cloud_landscape, IndexSeries};
use crate::landscape::{c1_series, lp_norm, EssentialPolicy};
use crate::marketdata::{log_returns, PriceSeries, DATE_FORMAT};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_GAP_TOLERANCE: usize = 5;
pub const DEFAULT_STRONG_THRESHOLD: f64 = 0.5;

/// Indices restricted to their common dates, each scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIndexSet {
    pub labels: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<Vec<f64>>,
}

/// Min-max scaling; a constant input maps to zeros.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
}

pub fn normalize_indices(indices: &[IndexSeries]) -> Result<NormalizedIndexSet> {
    let Some(first) = indices.first() else {
        return Err(Error::EmptyInput);
    };
    if indices.iter().any(IndexSeries::is_empty) {
        return Err(Error::EmptyInput);
    }
    let mut common: BTreeSet<NaiveDate> = first.dates.iter().copied().collect();
    for s in &indices[1..] {
        let these: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        common.retain(|d| these.contains(d));
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let rows = indices
        .iter()
        .map(|s| {
            let kept: Vec<f64> = s
                .dates
                .iter()
                .zip(&s.values)
                .filter(|(d, _)| common.contains(d))
                .map(|(_, v)| *v)
                .collect();
            min_max(&kept)
        })
        .collect();
    Ok(NormalizedIndexSet {
        labels: indices.iter().map(|s| s.label.clone()).collect(),
        dates: common.into_iter().collect(),
        rows,
    })
}

/// Pointwise mean of the rows named in `subset`.
pub fn average_index(set: &NormalizedIndexSet, subset: &[String], label: &str) -> Result<IndexSeries> {
    if subset.is_empty() {
        return Err(Error::InvalidParameter("empty subset".into()));
    }
    let picked = subset
        .iter()
        .map(|l| {
            set.labels
                .iter()
                .position(|x| x == l)
                .map(|i| &set.rows[i])
                .ok_or_else(|| Error::UnknownLabel(l.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = picked.len() as f64;
    let values = (0..set.dates.len()).map(|t| picked.iter().map(|r| r[t]).sum::<f64>() / n).collect();
    Ok(IndexSeries::new(label, set.dates.clone(), values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step of the retained run.
    pub history: Vec<f64>,
}

impl ClusterResult {
    pub fn distance_to_centroid(&self, rows: &[Vec<f64>], i: usize) -> f64 {
        sq_dist(&rows[i], &self.centroids[self.assignments[i]]).sqrt()
    }
}

/// Independent k-means++ starts per call; the run with least inertia wins.
pub const KMEANS_RESTARTS: usize = 10;
const MAX_LLOYD_STEPS: usize = 10_000;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![rows[rng.random_range(0..rows.len())].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap();
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..rows.len())
        };
        centroids.push(rows[pick].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &rows[pick]));
        }
    }
    centroids
}

fn lloyd(rows: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> ClusterResult {
    let k = centroids.len();
    let dim = rows[0].len();
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_STEPS {
        let (next, inertia): (Vec<usize>, f64) = {
            let pairs: Vec<(usize, f64)> = rows.iter().map(|r| nearest(r, &centroids)).collect();
            let total = pairs.iter().map(|p| p.1).sum();
            (pairs.into_iter().map(|p| p.0).collect(), total)
        };
        history.push(inertia);
        if next == assignments {
            break;
        }
        assignments = next;
        // running means: exact when all members coincide
        let mut means = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &a) in rows.iter().zip(&assignments) {
            counts[a] += 1;
            let n = counts[a] as f64;
            for (m, v) in means[a].iter_mut().zip(r) {
                *m += (v - *m) / n;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = std::mem::take(&mut means[j]);
            }
        }
    }
    let inertia = *history.last().unwrap();
    ClusterResult { k, assignments, centroids, inertia, history }
}

/// Lloyd's algorithm from seeded k-means++ starts, iterated to an
/// assignment fixpoint.
pub fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > rows.len() {
        return Err(Error::KTooLarge { k, rows: rows.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusterResult> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = lloyd(rows, plus_plus(rows, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElbowResult {
    pub k: usize,
    /// `(k, inertia)` for every candidate.
    pub curve: Vec<(usize, f64)>,
}

/// Picks the candidate with the largest discrete second difference of the
/// inertia curve; when no second difference is positive the smallest
/// candidate is returned.
pub fn elbow_select(rows: &[Vec<f64>], k_range: &[usize], seed: u64) -> Result<ElbowResult> {
    if k_range.len() < 3 {
        return Err(Error::RangeTooSmall(k_range.len()));
    }
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < 3 {
        return Err(Error::RangeTooSmall(ks.len()));
    }
    let curve = ks
        .iter()
        .map(|&k| Ok((k, kmeans(rows, k, seed)?.inertia)))
        .collect::<Result<Vec<_>>>()?;
    let scale = curve[0].1.abs().max(f64::MIN_POSITIVE);
    let mut best = (ks[0], 0.0);
    for i in 1..curve.len() - 1 {
        let second = curve[i - 1].1 - 2.0 * curve[i].1 + curve[i + 1].1;
        if second > best.1 && second > 1e-12 * scale {
            best = (curve[i].0, second);
        }
    }
    Ok(ElbowResult { k: best.0, curve })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca2 {
    /// One `[pc1, pc2]` row per input row.
    pub projections: Vec<[f64; 2]>,
    /// Variance along each component.
    pub explained_variance: [f64; 2],
    /// Unit directions in the input space.
    pub components: [Vec<f64>; 2],
}

/// Projects centered rows on the two leading principal directions. Each
/// direction is signed so that its largest-magnitude entry is positive.
pub fn pca2(rows: &[Vec<f64>]) -> Result<Pca2> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch(m, rows.iter().map(Vec::len).find(|&l| l != m).unwrap()));
    }
    let mut x = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    for j in 0..m {
        let mean = x.column(j).sum() / n as f64;
        x.column_mut(j).add_scalar_mut(-mean);
    }
    // Work with whichever of X^T X (m x m) and X X^T (n x n) is smaller.
    let (values, directions): (Vec<f64>, Vec<Vec<f64>>) = if m <= n {
        let eig = SymmetricEigen::new(x.transpose() * &x);
        let order = descending(&eig.eigenvalues.as_slice().to_vec());
        order
            .iter()
            .take(2)
            .map(|&i| (eig.eigenvalues[i].max(0.0), eig.eigenvectors.column(i).iter().copied().collect()))
            .unzip()
    } else {
        let eig = SymmetricEigen::new(&x * x.transpose());
        let order = descending(&eig.eigenvalues.as_slice().to_vec());
        order
            .iter()
            .take(2)
            .map(|&i| {
                let lambda = eig.eigenvalues[i].max(0.0);
                let u = eig.eigenvectors.column(i);
                let v = x.transpose() * u;
                let norm = v.norm();
                let dir = if norm > 0.0 { (v / norm).iter().copied().collect() } else { vec![0.0; m] };
                (lambda, dir)
            })
            .unzip()
    };
    let mut components: [Vec<f64>; 2] = [vec![0.0; m], vec![0.0; m]];
    let mut explained = [0.0; 2];
    for (c, (lambda, mut dir)) in values.into_iter().zip(directions).enumerate() {
        let lead = dir.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            dir.iter_mut().for_each(|v| *v = -*v);
        }
        explained[c] = lambda / (n - 1) as f64;
        components[c] = dir;
    }
    let projections = (0..n)
        .map(|i| {
            let row = x.row(i);
            let dot = |d: &[f64]| row.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
            [dot(&components[0]), dot(&components[1])]
        })
        .collect();
    Ok(Pca2 { projections, explained_variance: explained, components })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EwsClass {
    None,
    Weak,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDiagnostics {
    pub cluster_id: usize,
    pub size: usize,
    /// Members with `y > 0.5`.
    pub high_points: usize,
    pub fraction_high: f64,
    /// Largest gap between consecutive time indices of the high points.
    pub max_gap: Option<usize>,
    pub qualifies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EwsVerdict {
    pub classification: EwsClass,
    pub cluster_id: Option<usize>,
    pub fraction_high: f64,
    pub max_gap: Option<usize>,
    pub k: usize,
    pub clusters: Vec<ClusterDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwsParams {
    /// Number of clusters; `None` picks it by the elbow rule over `1..=8`.
    pub k: Option<usize>,
    pub seed: u64,
    pub gap_tolerance: usize,
    pub strong_threshold: f64,
}

impl Default for EwsParams {
    fn default() -> Self {
        EwsParams {
            k: None,
            seed: DEFAULT_SEED,
            gap_tolerance: DEFAULT_GAP_TOLERANCE,
            strong_threshold: DEFAULT_STRONG_THRESHOLD,
        }
    }
}

/// Clusters the points `(x_t, y_t)` and looks for a cluster whose points
/// above `y = 0.5` form an almost contiguous run of time indices.
pub fn detect_ews(x: &[f64], y: &[f64], params: &EwsParams) -> Result<EwsVerdict> {
    if x.len() != y.len() {
        return Err(Error::Misalignment(format!("x has {} points, y has {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.iter().chain(y).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter("x and y must be scaled to [0, 1]".into()));
    }
    let points: Vec<Vec<f64>> = x.iter().zip(y).map(|(a, b)| vec![*a, *b]).collect();
    let k = match params.k {
        Some(k) => k,
        None => {
            let top = points.len().min(8);
            if top >= 3 {
                elbow_select(&points, &(1..=top).collect::<Vec<_>>(), params.seed)?.k
            } else {
                1
            }
        }
    };
    let clusters = kmeans(&points, k, params.seed)?;
    let mut diagnostics = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<usize> = (0..points.len()).filter(|&i| clusters.assignments[i] == c).collect();
        let high: Vec<usize> = members.iter().copied().filter(|&i| y[i] > 0.5).collect();
        let max_gap = (!high.is_empty()).then(|| high.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0));
        let fraction_high = if members.is_empty() { 0.0 } else { high.len() as f64 / members.len() as f64 };
        diagnostics.push(ClusterDiagnostics {
            cluster_id: c,
            size: members.len(),
            high_points: high.len(),
            fraction_high,
            max_gap,
            qualifies: max_gap.is_some_and(|g| g <= params.gap_tolerance),
        });
    }
    let best = diagnostics
        .iter()
        .filter(|d| d.qualifies)
        .max_by(|a, b| a.fraction_high.total_cmp(&b.fraction_high).then(b.cluster_id.cmp(&a.cluster_id)));
    let (classification, cluster_id, fraction_high, max_gap) = match best {
        Some(d) if d.fraction_high > params.strong_threshold => (EwsClass::Strong, Some(d.cluster_id), d.fraction_high, d.max_gap),
        Some(d) => (EwsClass::Weak, Some(d.cluster_id), d.fraction_high, d.max_gap),
        None => (EwsClass::None, None, 0.0, None),
    };
    Ok(EwsVerdict { classification, cluster_id, fraction_high, max_gap, k, clusters: diagnostics })
}

pub const EWS_DIM: usize = 4;
pub const EWS_WINDOW: usize = 50;

/// Log price and C¹ quantity on the anchor date of each window after the
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct EwsSeries {
    pub dates: Vec<NaiveDate>,
    pub log_price: Vec<f64>,
    pub c1: Vec<f64>,
}

impl EwsSeries {
    /// `date,log_price,c1,x,y` with `x`, `y` the min-max scaled columns.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let (x, y) = (min_max(&self.log_price), min_max(&self.c1));
        writeln!(out, "date,log_price,c1,x,y")?;
        for i in 0..self.dates.len() {
            writeln!(out, "{},{},{},{},{}", self.dates[i].format(DATE_FORMAT), self.log_price[i], self.c1[i], x[i], y[i])?;
        }
        Ok(())
    }
}

/// Delay-embeds daily log returns (`tau = 1`), takes the L¹ norm of the H1
/// landscape of every window of `w` points and turns the norms into the C¹
/// series.
pub fn ews_series(prices: &PriceSeries, d: usize, w: usize) -> Result<EwsSeries> {
    let returns = log_returns(prices)?;
    let emb = takens_embed(&returns, d, 1)?;
    let clouds = sliding_clouds(&emb, w)?;
    let norms = clouds
        .par_iter()
        .map(|c| Ok(lp_norm(&cloud_landscape(c, 1, EssentialPolicy::DropEssential, None)?, 1)))
        .collect::<Result<Vec<_>>>()?;
    let c1 = c1_series(&norms)?;
    let dates: Vec<NaiveDate> = clouds[1..].iter().map(|c| c.anchor_date).collect();
    let log_price = dates
        .iter()
        .map(|d| {
            let i = prices.dates.binary_search(d).expect("anchor dates are price dates");
            prices.closes[i].ln()
        })
        .collect();
    Ok(EwsSeries { dates, log_price, c1 })
}

/// [`ews_series`] followed by [`detect_ews`] on the scaled columns.
pub fn ews_from_prices(prices: &PriceSeries, d: usize, w: usize, params: &EwsParams) -> Result<(EwsSeries, EwsVerdict)> {
    let s = ews_series(prices, d, w)?;
    let verdict = detect_ews(&min_max(&s.log_price), &min_max(&s.c1), params)?;
    Ok((s, verdict))
}

/// `config_label,cluster_id,distance_to_centroid`.
pub fn write_cluster_report<W: Write>(set: &NormalizedIndexSet, result: &ClusterResult, mut out: W) -> io::Result<()> {
    writeln!(out, "config_label,cluster_id,distance_to_centroid")?;
    for (i, label) in set.labels.iter().enumerate() {
        writeln!(out, "{},{},{}", label, result.assignments[i], result.distance_to_centroid(&set.rows, i))?;
    }
    Ok(())
}

/// `cluster_id,date,value`, one line per centroid coordinate.
pub fn write_centroids<W: Write>(set: &NormalizedIndexSet, result: &ClusterResult, mut out: W) -> io::Result<()> {
    writeln!(out, "cluster_id,date,value")?;
    for (c, centroid) in result.centroids.iter().enumerate() {
        for (d, v) in set.dates.iter().zip(centroid) {
            writeln!(out, "{},{},{}", c, d.format(DATE_FORMAT), v)?;
        }
    }
    Ok(())
}

/// `config_label,pc1,pc2`.
pub fn write_projection<W: Write>(labels: &[String], pca: &Pca2, mut out: W) -> io::Result<()> {
    writeln!(out, "config_label,pc1,pc2")?;
    for (l, p) in labels.iter().zip(&pca.projections) {
        writeln!(out, "{},{},{}", l, p[0], p[1])?;
    }
    Ok(())
}

/// `k,inertia`.
pub fn write_inertia_curve<W: Write>(curve: &[(usize, f64)], mut out: W) -> io::Result<()> {
    writeln!(out, "k,inertia")?;
    for (k, v) in curve {
        writeln!(out, "{k},{v}")?;
    }
    Ok(())
}
