//! Turbulence index pipelines.
//!
//! * [`turbulence_index`]: delay-embed one return series, window it, and
//!   track the L² distance between landscapes `T` windows apart.
//! * [`phti`]: Wasserstein distance between consecutive windows of a
//!   multi-asset cloud, smoothed by a trailing mean.
//! * [`correlation_graph_index`]: diagrams of rolling correlation graphs
//!   compared against a reference day.
//! * [`landscape_norm_index`]: L^p norms of H1 landscapes of multi-asset
//!   clouds.
//!
//! Window computations fan out with rayon; results are always collected in
//! window order.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagmetrics::wasserstein;
use crate::embedding::{multiasset_clouds, sliding_clouds, takens_embed, EmbeddingConfig, PointCloud};
use crate::error::{Error, Result};
use crate::filtration::{distance_matrix, vr_filtration_capped, DistanceMatrix};
use crate::landscape::{landscape_distance, landscape_from_diagram, lp_norm, EssentialPolicy, PersistenceLandscape};
use crate::marketdata::{check_aligned, ReturnSeries, DATE_FORMAT};
use crate::persistence::{compute_persistence, PersistenceDiagram};

/// Parameters of one turbulence index variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub d: usize,
    pub tau: usize,
    pub w: usize,
    /// Lag `T` between the compared landscapes.
    #[serde(rename = "T")]
    pub lag: usize,
    pub dim: usize,
    #[serde(default)]
    pub policy: EssentialPolicy,
    /// Largest filtration value; `None` means the cloud diameter.
    #[serde(default)]
    pub max_scale: Option<f64>,
}

impl IndexConfig {
    pub fn new(d: usize, tau: usize, w: usize, lag: usize, dim: usize) -> Self {
        IndexConfig { d, tau, w, lag, dim, policy: EssentialPolicy::default(), max_scale: None }
    }

    pub fn embedding(&self) -> EmbeddingConfig {
        EmbeddingConfig { d: self.d, tau: self.tau, w: self.w }
    }

    pub fn validate(&self) -> Result<()> {
        self.embedding().validate()?;
        if self.lag < 1 {
            return Err(Error::InvalidParameter("lag T must be at least 1".into()));
        }
        if self.dim > 1 {
            return Err(Error::InvalidParameter(format!("dim must be 0 or 1, got {}", self.dim)));
        }
        Ok(())
    }

    /// `d{d}_tau{tau}_w{w}_T{T}_dim{dim}`.
    pub fn label(&self) -> String {
        format!("d{}_tau{}_w{}_T{}_dim{}", self.d, self.tau, self.w, self.lag, self.dim)
    }

    pub fn file_name(&self) -> String {
        format!("idx_{}.csv", self.label())
    }

    /// Minimal series length yielding at least one index value.
    pub fn min_length(&self) -> usize {
        self.tau * (self.d - 1) + self.w + self.lag
    }
}

pub const GRID_D: [usize; 4] = [3, 4, 5, 10];
pub const GRID_TAU: [usize; 3] = [1, 2, 5];
pub const GRID_W: [usize; 2] = [30, 60];
pub const GRID_T: [usize; 5] = [1, 5, 15, 30, 60];
pub const GRID_DIM: [usize; 2] = [0, 1];

/// Cartesian product of the given parameter lists, `d` varying slowest.
pub fn grid(d: &[usize], tau: &[usize], w: &[usize], lag: &[usize], dim: &[usize]) -> Vec<IndexConfig> {
    let mut out = Vec::with_capacity(d.len() * tau.len() * w.len() * lag.len() * dim.len());
    for &d in d {
        for &tau in tau {
            for &w in w {
                for &lag in lag {
                    for &dim in dim {
                        out.push(IndexConfig::new(d, tau, w, lag, dim));
                    }
                }
            }
        }
    }
    out
}

/// The 4 x 3 x 2 x 5 x 2 = 240 parameter combinations studied for the
/// turbulence index.
pub fn paper_grid() -> Vec<IndexConfig> {
    grid(&GRID_D, &GRID_TAU, &GRID_W, &GRID_T, &GRID_DIM)
}

/// A dated, labelled index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl IndexSeries {
    pub fn new(label: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Self {
        debug_assert_eq!(dates.len(), values.len());
        IndexSeries { label: label.into(), dates, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes CSV `date,value` with shortest round-trip floats.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "date,value")?;
        for (d, v) in self.dates.iter().zip(&self.values) {
            writeln!(out, "{},{}", d.format(DATE_FORMAT), v)?;
        }
        Ok(())
    }

    /// Reads CSV with a `date` column and a `value` column.
    pub fn read_csv<R: Read>(reader: R, label: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::MalformedRow { line: 1, reason: e.to_string() })?
            .clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::MalformedRow {
                line: 1,
                reason: format!("missing column {name:?}"),
            })
        };
        let (di, vi) = (col("date")?, col("value")?);
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::MalformedRow { line: 0, reason: e.to_string() })?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |reason: String| Error::MalformedRow { line, reason };
            let date = NaiveDate::parse_from_str(rec.get(di).unwrap_or(""), DATE_FORMAT)
                .map_err(|e| bad(e.to_string()))?;
            let value: f64 = rec
                .get(vi)
                .unwrap_or("")
                .parse()
                .map_err(|_| bad(format!("bad value {:?}", rec.get(vi))))?;
            if let Some(&last) = dates.last() {
                if date <= last {
                    return Err(Error::DuplicateDate(date));
                }
            }
            dates.push(date);
            values.push(value);
        }
        if dates.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(IndexSeries::new(label, dates, values))
    }
}

/// Persistence diagram of one cloud in one homology dimension.
pub fn cloud_diagram(cloud: &PointCloud, dim: usize, max_scale: Option<f64>) -> Result<PersistenceDiagram> {
    diagram_of_matrix(&distance_matrix(cloud), dim, max_scale)
}

fn diagram_of_matrix(dm: &DistanceMatrix, dim: usize, max_scale: Option<f64>) -> Result<PersistenceDiagram> {
    let max_dim = (dim + 1).min(dm.len().saturating_sub(1));
    let f = vr_filtration_capped(dm, max_dim, max_scale)?;
    let mut out = compute_persistence(&f, &[dim])?;
    Ok(out.remove(&dim).unwrap_or_else(|| PersistenceDiagram::empty(dim)))
}

/// Landscape of one cloud under the config's essential-class policy.
pub fn cloud_landscape(cloud: &PointCloud, dim: usize, policy: EssentialPolicy, max_scale: Option<f64>) -> Result<PersistenceLandscape> {
    let dm = distance_matrix(cloud);
    let diagram = diagram_of_matrix(&dm, dim, max_scale)?;
    let cap = max_scale.map_or(dm.diameter(), |s| s.min(dm.diameter()));
    landscape_from_diagram(&diagram, policy.resolved(cap))
}

fn window_landscapes(x: &ReturnSeries, c: &IndexConfig) -> Result<(Vec<PointCloud>, Vec<PersistenceLandscape>)> {
    let emb = takens_embed(x, c.d, c.tau)?;
    let clouds = sliding_clouds(&emb, c.w)?;
    let landscapes = clouds
        .par_iter()
        .map(|cl| cloud_landscape(cl, c.dim, c.policy, c.max_scale))
        .collect::<Result<Vec<_>>>()?;
    Ok((clouds, landscapes))
}

fn distances_at_lag(
    c: &IndexConfig,
    clouds: &[PointCloud],
    landscapes: &[PersistenceLandscape],
) -> IndexSeries {
    let (dates, values) = (c.lag..landscapes.len())
        .map(|t| (clouds[t].anchor_date, landscape_distance(&landscapes[t - c.lag], &landscapes[t], 2)))
        .unzip();
    IndexSeries::new(c.label(), dates, values)
}

fn check_length(x: &ReturnSeries, c: &IndexConfig) -> Result<()> {
    c.validate()?;
    if x.len() < c.min_length() {
        return Err(Error::SeriesTooShort { have: x.len(), need: c.min_length() });
    }
    Ok(())
}

/// `M_t = ||lambda_{t-T} - lambda_t||_2` for every window `t >= T`, dated by
/// the last observation of window `t`.
pub fn turbulence_index(x: &ReturnSeries, c: &IndexConfig) -> Result<IndexSeries> {
    check_length(x, c)?;
    let (clouds, landscapes) = window_landscapes(x, c)?;
    Ok(distances_at_lag(c, &clouds, &landscapes))
}

/// Runs many configs over one series. Configs differing only in the lag
/// share their landscapes. Results come back in input order.
pub fn turbulence_index_grid(x: &ReturnSeries, configs: &[IndexConfig]) -> Vec<Result<IndexSeries>> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, c) in configs.iter().enumerate() {
        let key = format!("{}_{}_{}_{}_{:?}_{:?}", c.d, c.tau, c.w, c.dim, c.policy, c.max_scale);
        groups.entry(key).or_default().push(i);
    }
    let mut out: Vec<Option<Result<IndexSeries>>> = (0..configs.len()).map(|_| None).collect();
    for members in groups.values() {
        let valid: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| match check_length(x, &configs[i]) {
                Ok(()) => true,
                Err(e) => {
                    out[i] = Some(Err(e));
                    false
                }
            })
            .collect();
        let Some(&first) = valid.first() else { continue };
        match window_landscapes(x, &configs[first]) {
            Ok((clouds, landscapes)) => {
                for &i in &valid {
                    out[i] = Some(Ok(distances_at_lag(&configs[i], &clouds, &landscapes)));
                }
            }
            Err(e) => {
                for &i in &valid {
                    out[i] = Some(Err(e.clone()));
                }
            }
        }
    }
    out.into_iter().map(|r| r.expect("every config is assigned")).collect()
}

/// `out[i] = mean(values[i-window+1..=i])`, dated by the last day.
pub fn trailing_mean(s: &IndexSeries, window: usize, label: &str) -> Result<IndexSeries> {
    if window < 1 {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    if s.len() < window {
        return Err(Error::TooShort { have: s.len(), need: window });
    }
    let values = s.values.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).collect();
    Ok(IndexSeries::new(label, s.dates[window - 1..].to_vec(), values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhtiConfig {
    /// Trading days per cloud.
    pub window: usize,
    /// Length of the trailing mean applied to the raw index.
    pub smoothing: usize,
    pub dim: usize,
    pub p_wasserstein: u32,
    pub max_scale: Option<f64>,
}

impl Default for PhtiConfig {
    fn default() -> Self {
        PhtiConfig { window: 60, smoothing: 60, dim: 1, p_wasserstein: 1, max_scale: None }
    }
}

/// Raw index `W_t = W_p(P_t, P_{t-1})` over consecutive windows of the
/// stacked portfolio returns, and its trailing mean.
pub fn phti(portfolio: &[ReturnSeries], cfg: &PhtiConfig) -> Result<(IndexSeries, IndexSeries)> {
    check_aligned(portfolio)?;
    let need = cfg.window + cfg.smoothing;
    let have = portfolio.first().map_or(0, ReturnSeries::len);
    if have < need {
        return Err(Error::TooShort { have, need });
    }
    let clouds = multiasset_clouds(portfolio, cfg.window)?;
    let diagrams = clouds
        .par_iter()
        .map(|c| cloud_diagram(c, cfg.dim, cfg.max_scale))
        .collect::<Result<Vec<_>>>()?;
    let values = (1..diagrams.len())
        .into_par_iter()
        .map(|t| wasserstein(&diagrams[t - 1], &diagrams[t], cfg.p_wasserstein))
        .collect::<Result<Vec<_>>>()?;
    let dates = clouds[1..].iter().map(|c| c.anchor_date).collect();
    let n = portfolio.len();
    let raw = IndexSeries::new(format!("phti_raw_N{n}_dim{}", cfg.dim), dates, values);
    let smoothed = trailing_mean(&raw, cfg.smoothing, &format!("phti_N{n}_dim{}", cfg.dim))?;
    Ok((raw, smoothed))
}

/// Correlation distances `sqrt(2(1 - c_ij))` between assets on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGraph {
    pub date: NaiveDate,
    pub labels: Vec<String>,
    pub weights: DistanceMatrix,
}

/// Pearson correlations over observations `t-window ..= t`.
pub fn correlation_graph(returns: &[ReturnSeries], t: usize, window: usize) -> Result<CorrelationGraph> {
    if returns.len() < 2 {
        return Err(Error::InvalidParameter("correlation graphs need at least 2 assets".into()));
    }
    check_aligned(returns)?;
    let len = returns[0].len();
    if t < window || t >= len {
        return Err(Error::InvalidParameter(format!(
            "day {t} does not admit a window of {window} in a series of length {len}"
        )));
    }
    let centered: Vec<Vec<f64>> = returns
        .iter()
        .map(|s| {
            let slice = &s.values[t - window..=t];
            let mean = slice.iter().sum::<f64>() / slice.len() as f64;
            slice.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if let Some(asset) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroVariance { asset });
    }
    let k = returns.len();
    let mut entries = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let c = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            let d = (2.0 * (1.0 - c)).sqrt();
            entries[i * k + j] = d;
            entries[j * k + i] = d;
        }
    }
    Ok(CorrelationGraph {
        date: returns[0].dates[t],
        labels: returns.iter().map(|s| s.asset_id.clone()).collect(),
        weights: DistanceMatrix::from_entries(k, entries)?,
    })
}

/// Wasserstein distance between the diagram of the correlation graph on day
/// `t` and the one on day `t0`, for every `t >= t0`.
pub fn correlation_graph_index(
    returns: &[ReturnSeries],
    t0: usize,
    window: usize,
    dim: usize,
    p: u32,
) -> Result<IndexSeries> {
    let reference = correlation_graph(returns, t0, window)?;
    let base = diagram_of_matrix(&reference.weights, dim, None)?;
    let len = returns[0].len();
    let points = (t0..len)
        .into_par_iter()
        .map(|t| {
            let g = correlation_graph(returns, t, window)?;
            let dg = diagram_of_matrix(&g.weights, dim, None)?;
            Ok((g.date, wasserstein(&base, &dg, p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (dates, values) = points.into_iter().unzip();
    Ok(IndexSeries::new(format!("corrgraph_T{window}_dim{dim}"), dates, values))
}

/// L^p norm of the H1 landscape of each window of the stacked returns.
pub fn landscape_norm_index(returns: &[ReturnSeries], w: usize, p: u32) -> Result<IndexSeries> {
    let clouds = multiasset_clouds(returns, w)?;
    let values = clouds
        .par_iter()
        .map(|c| Ok(lp_norm(&cloud_landscape(c, 1, EssentialPolicy::DropEssential, None)?, p)))
        .collect::<Result<Vec<_>>>()?;
    let dates = clouds.iter().map(|c| c.anchor_date).collect();
    Ok(IndexSeries::new(format!("landscape_L{p}_w{w}"), dates, values))
}

/// Trailing sample variance (denominator `window - 1`).
pub fn moving_variance(s: &IndexSeries, window: usize) -> Result<IndexSeries> {
    if window < 2 {
        return Err(Error::InvalidParameter("variance window must be at least 2".into()));
    }
    if s.len() < window {
        return Err(Error::TooShort { have: s.len(), need: window });
    }
    let values = s
        .values
        .windows(window)
        .map(|w| {
            let mean = w.iter().sum::<f64>() / window as f64;
            w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (window - 1) as f64
        })
        .collect();
    Ok(IndexSeries::new(format!("{}_mvar{window}", s.label), s.dates[window - 1..].to_vec(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise(seed: u64, n: usize, sigma: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    }

    fn series(values: Vec<f64>) -> ReturnSeries {
        ReturnSeries::from_values("x", values)
    }

    #[test]
    fn grid_has_240_distinct_configs() {
        let g = paper_grid();
        assert_eq!(g.len(), 240);
        let labels: std::collections::BTreeSet<String> = g.iter().map(IndexConfig::label).collect();
        assert_eq!(labels.len(), 240);
        assert_eq!(g[0].file_name(), "idx_d3_tau1_w30_T1_dim0.csv");
    }

    #[test]
    fn constant_series_gives_zero_index() {
        let x = series(vec![0.01; 80]);
        for dim in [0, 1] {
            let c = IndexConfig::new(3, 2, 30, 5, dim);
            let idx = turbulence_index(&x, &c).unwrap();
            assert_eq!(idx.len(), 80 - c.min_length() + 1);
            assert!(idx.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn too_short() {
        let c = IndexConfig::new(4, 2, 30, 5, 0);
        let x = series(vec![0.0; 40]);
        assert_eq!(turbulence_index(&x, &c).unwrap_err(), Error::SeriesTooShort { have: 40, need: 41 });
        assert_eq!(turbulence_index(&series(vec![0.0; 41]), &c).unwrap().len(), 1);
    }

    #[test]
    fn grid_matches_single_runs() {
        let x = series(noise(3, 90, 0.01));
        let configs = grid(&[3], &[1, 2], &[20], &[1, 5], &[0, 1]);
        let all = turbulence_index_grid(&x, &configs);
        for (c, r) in configs.iter().zip(all) {
            assert_eq!(r.unwrap(), turbulence_index(&x, c).unwrap());
        }
        let long = [IndexConfig::new(3, 1, 20, 200, 0)];
        assert!(matches!(turbulence_index_grid(&x, &long)[0], Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn no_look_ahead() {
        let x = series(noise(4, 120, 0.01));
        let c = IndexConfig::new(3, 2, 20, 5, 1);
        let full = turbulence_index(&x, &c).unwrap();
        let cut = 90;
        let mut head = x.clone();
        head.values.truncate(cut);
        head.dates.truncate(cut);
        let part = turbulence_index(&head, &c).unwrap();
        assert_eq!(part.values[..], full.values[..part.len()]);
        assert_eq!(*part.dates.last().unwrap(), x.dates[cut - 1]);
    }

    #[test]
    fn jump_peak_location() {
        let mut values = noise(5, 200, 0.002);
        values[150] = 0.2;
        let x = series(values);
        let c = IndexConfig::new(3, 1, 30, 5, 0);
        let idx = turbulence_index(&x, &c).unwrap();
        let argmax = (0..idx.len()).max_by(|&a, &b| idx.values[a].total_cmp(&idx.values[b])).unwrap();
        let day = x.dates.iter().position(|d| *d == idx.dates[argmax]).unwrap();
        assert!(day >= 150 && day <= 150 + c.w + c.lag, "peak at day {day}");
    }

    #[test]
    fn index_csv_roundtrip() {
        let s = IndexSeries::new("a", series(vec![0.0; 3]).dates, vec![0.1, 1.0 / 3.0, 2.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,value\n2000-01-01,0.1\n"));
        assert_eq!(IndexSeries::read_csv(buf.as_slice(), "a").unwrap(), s);
    }

    #[test]
    fn phti_behaviour() {
        let raw = IndexSeries::new("r", series(vec![0.0; 70]).dates, vec![2.5; 70]);
        assert!(trailing_mean(&raw, 60, "s").unwrap().values.iter().all(|&v| v == 2.5));

        let same: Vec<ReturnSeries> = (0..3).map(|k| series(vec![k as f64 * 0.01; 130])).collect();
        let (raw, smooth) = phti(&same, &PhtiConfig::default()).unwrap();
        assert_eq!(raw.len(), 130 - 60);
        assert_eq!(smooth.len(), 130 - 119);
        assert!(raw.values.iter().all(|&v| v == 0.0));

        let too_short: Vec<ReturnSeries> = (0..3).map(|k| series(noise(k, 100, 0.01))).collect();
        assert_eq!(
            phti(&too_short, &PhtiConfig::default()).unwrap_err(),
            Error::TooShort { have: 100, need: 120 }
        );
    }

    #[test]
    fn phti_portfolio_sizes() {
        for n in [10usize, 30] {
            let port: Vec<ReturnSeries> = (0..n as u64).map(|k| series(noise(k, 125, 0.01))).collect();
            let cfg = PhtiConfig { dim: 0, ..PhtiConfig::default() };
            let (raw, smooth) = phti(&port, &cfg).unwrap();
            assert_eq!(raw.label, format!("phti_raw_N{n}_dim0"));
            assert_eq!(smooth.len(), 6);
            assert!(raw.values.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn phti_smoothing_is_linear() {
        let dates = series(vec![0.0; 80]).dates;
        let vals = noise(9, 80, 1.0);
        let a = 3.5;
        let s1 = trailing_mean(&IndexSeries::new("a", dates.clone(), vals.clone()), 60, "a").unwrap();
        let scaled: Vec<f64> = vals.iter().map(|v| v * a).collect();
        let s2 = trailing_mean(&IndexSeries::new("b", dates, scaled), 60, "b").unwrap();
        for (x, y) in s1.values.iter().zip(&s2.values) {
            assert!((x * a - y).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_weights() {
        let base = noise(10, 40, 0.01);
        let x = series(base.clone());
        let twin = series(base.iter().map(|v| 3.0 * v + 1.0).collect());
        let anti = series(base.iter().map(|v| -v).collect());
        let g = correlation_graph(&[x.clone(), twin, anti], 20, 15).unwrap();
        assert!(g.weights.get(0, 1) < 1e-6);
        assert!((g.weights.get(0, 2) - 2.0).abs() < 1e-9);

        let other = series(noise(11, 40, 0.01));
        let d = correlation_graph(&[x.clone(), other.clone()], 30, 15).unwrap().weights.get(0, 1);
        assert!((d - 2f64.sqrt()).abs() < 0.5);

        let flat = series(vec![0.0; 40]);
        assert_eq!(
            correlation_graph(&[x.clone(), flat], 20, 15).unwrap_err(),
            Error::ZeroVariance { asset: 1 }
        );

        // affine rescaling of one asset leaves every weight unchanged
        let scaled = series(other.values.iter().map(|v| 0.25 * v - 7.0).collect());
        let g1 = correlation_graph(&[x.clone(), other], 30, 15).unwrap();
        let g2 = correlation_graph(&[x, scaled], 30, 15).unwrap();
        assert!((g1.weights.get(0, 1) - g2.weights.get(0, 1)).abs() < 1e-12);
    }

    #[test]
    fn correlation_index() {
        let assets: Vec<ReturnSeries> = (0..5).map(|k| series(noise(20 + k, 80, 0.01))).collect();
        let idx = correlation_graph_index(&assets, 20, 15, 0, 1).unwrap();
        assert_eq!(idx.values[0], 0.0);
        assert_eq!(idx.len(), 60);
    }

    #[test]
    fn correlation_spike_raises_index() {
        // independent assets, then all assets follow one common factor
        let n = 120;
        let spike = 80;
        let common = noise(99, n, 0.01);
        let assets: Vec<ReturnSeries> = (0..6)
            .map(|k| {
                let own = noise(40 + k, n, 0.01);
                series((0..n).map(|t| if t >= spike { common[t] + 0.1 * own[t] } else { own[t] }).collect())
            })
            .collect();
        let idx = correlation_graph_index(&assets, 20, 15, 0, 1).unwrap();
        let before = idx.values[..spike - 20].iter().cloned().fold(0.0, f64::max);
        let after = idx.values[spike - 20 + 15..].iter().sum::<f64>() / (n - spike - 15) as f64;
        assert!(after > before, "after {after} before {before}");
    }

    #[test]
    fn stationary_market_stays_bounded() {
        let assets: Vec<ReturnSeries> = (0..5).map(|k| series(noise(60 + k, 200, 0.01))).collect();
        let idx = correlation_graph_index(&assets, 20, 15, 0, 1).unwrap();
        // 4 finite H0 bars with deaths in [0, 2]: total cost is at most 4
        assert!(idx.values.iter().all(|&v| v <= 4.0));
    }

    #[test]
    fn landscape_norms() {
        let zero: Vec<ReturnSeries> = (0..4).map(|_| series(vec![0.001; 60])).collect();
        let idx = landscape_norm_index(&zero, 30, 1).unwrap();
        assert!(idx.values.iter().all(|&v| v == 0.0));

        let small: Vec<ReturnSeries> = (0..4).map(|k| series(noise(k, 120, 0.01))).collect();
        let large: Vec<ReturnSeries> = small
            .iter()
            .map(|s| series(s.values.iter().map(|v| v * 3.0).collect()))
            .collect();
        for p in [1, 2] {
            let a = landscape_norm_index(&small, 50, p).unwrap();
            let b = landscape_norm_index(&large, 50, p).unwrap();
            let mean = |s: &IndexSeries| s.values.iter().sum::<f64>() / s.len() as f64;
            assert!(mean(&b) > mean(&a));
        }
    }

    #[test]
    fn moving_variance_examples() {
        let dates = series(vec![0.0; 6]).dates;
        let flat = IndexSeries::new("f", dates.clone(), vec![3.0; 6]);
        assert!(moving_variance(&flat, 3).unwrap().values.iter().all(|&v| v == 0.0));
        let two = IndexSeries::new("t", dates[..2].to_vec(), vec![0.0, 2.0]);
        assert_eq!(moving_variance(&two, 2).unwrap().values, vec![2.0]);
        let alt = IndexSeries::new("a", dates[..4].to_vec(), vec![1.0, -1.0, 1.0, -1.0]);
        assert!((moving_variance(&alt, 4).unwrap().values[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(moving_variance(&two, 3).unwrap_err(), Error::TooShort { have: 2, need: 3 });
    }
}
