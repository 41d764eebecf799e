//! `tdaindex` command-line front end.
//!
//! Options come from flags, then the `--config` JSON document, then built-in
//! defaults. Every command writes its files atomically into `--out` and
//! finishes with a `manifest.json` describing them.

pub mod config;
mod output;
mod svg;

use std::ffi::OsString;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use serde::Serialize;

use tdaindex::analysis::{
    self, write_centroids, write_cluster_report, write_inertia_curve, write_projection, EWS_DIM, EWS_WINDOW,
};
use tdaindex::backtest::{write_equity_curve, write_report, DEFAULT_LOOKBACK};
use tdaindex::indices::{self, GRID_D, GRID_DIM, GRID_T, GRID_TAU, GRID_W};
use tdaindex::marketdata::{inner_join, returns, DATE_FORMAT};
use tdaindex::{
    correlation_graph_index, elbow_select, ews_from_prices, kmeans, landscape_norm_index, monthly_last,
    monthly_returns, moving_variance, normalize_indices, parse_price_csv, pca2, performance, phti, run_strategy,
    turbulence_index_grid, CsvSchema, EssentialPolicy, EwsParams, IndexConfig, IndexSeries, ParseOptions,
    PhtiConfig, PriceSeries, ReturnKind, ReturnSeries, StrategyKind, StrategySpec,
};

use config::*;
use output::OutDir;

pub const DEFAULT_SEED: u64 = analysis::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "tdaindex", version, about = "Persistent-homology turbulence indices for price series")]
pub struct Cli {
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: `out`).
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for k-means initialization.
    #[arg(long, global = true, env = "TDA_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse price CSVs and write aligned return series.
    Ingest {
        #[command(flatten)]
        input: InputOpts,
    },
    /// Compute index series.
    Index {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        opts: IndexOpts,
    },
    /// Normalize, cluster and project a family of indices.
    Cluster {
        #[command(flatten)]
        opts: ClusterOpts,
    },
    /// C1 series and early warning verdict for one asset.
    Ews {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        opts: EwsOpts,
    },
    /// Quintile strategies against buy-and-hold.
    Backtest {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        opts: BacktestOpts,
    },
    /// Join an index with prices for plotting.
    Plotdata {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        opts: PlotOpts,
    },
}

/// Parses `args`, runs the command and returns the written file names.
pub fn run_from<I, T>(args: I) -> Result<Vec<String>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(Cli::parse_from(args))
}

pub fn run(cli: Cli) -> Result<Vec<String>> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out_dir = cli.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs.or(cfg.jobs) {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().context("starting worker pool")?;
    let mut out = OutDir::create(&out_dir)?;
    pool.install(|| match cli.command {
        Command::Ingest { input } => cmd_ingest(&input.merge(cfg.input), &mut out),
        Command::Index { input, opts } => cmd_index(&input.merge(cfg.input), &opts.merge(cfg.index), &mut out),
        Command::Cluster { opts } => cmd_cluster(&opts.merge(cfg.cluster), seed, &mut out),
        Command::Ews { input, opts } => cmd_ews(&input.merge(cfg.input), &opts.merge(cfg.ews), seed, &mut out),
        Command::Backtest { input, opts } => cmd_backtest(&input.merge(cfg.input), &opts.merge(cfg.backtest), &mut out),
        Command::Plotdata { input, opts } => cmd_plotdata(&input.merge(cfg.input), &opts.merge(cfg.plotdata), &mut out),
    })?;
    Ok(out.written().to_vec())
}

#[derive(Serialize)]
struct SeriesEntry {
    label: String,
    file: String,
    rows: usize,
    first_date: Option<String>,
    last_date: Option<String>,
}

impl SeriesEntry {
    fn new(label: &str, file: &str, dates: &[NaiveDate]) -> Self {
        let fmt = |d: &NaiveDate| d.format(DATE_FORMAT).to_string();
        SeriesEntry {
            label: label.to_string(),
            file: file.to_string(),
            rows: dates.len(),
            first_date: dates.first().map(fmt),
            last_date: dates.last().map(fmt),
        }
    }
}

#[derive(Serialize)]
struct Manifest<T: Serialize> {
    command: &'static str,
    version: &'static str,
    #[serde(flatten)]
    details: T,
    files: Vec<String>,
}

fn finish<T: Serialize>(out: &mut OutDir, command: &'static str, details: T) -> Result<()> {
    let manifest = Manifest { command, version: env!("CARGO_PKG_VERSION"), details, files: out.written().to_vec() };
    out.write_json("manifest.json", &manifest)?;
    Ok(())
}

fn asset_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "asset".into(), |s| s.to_string_lossy().into_owned())
}

fn load_prices(input: &InputOpts) -> Result<Vec<PriceSeries>> {
    if input.inputs.is_empty() {
        bail!("no input files given (use --input)");
    }
    let defaults = CsvSchema::default();
    let schema = CsvSchema {
        date_column: input.date_column.clone().unwrap_or(defaults.date_column),
        close_column: input.close_column.clone().unwrap_or(defaults.close_column),
    };
    let opts = ParseOptions { forward_fill: input.forward_fill };
    input
        .inputs
        .iter()
        .map(|path| {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            parse_price_csv(file, &asset_id(path), &schema, opts).with_context(|| format!("parsing {}", path.display()))
        })
        .collect()
}

fn single_price(input: &InputOpts) -> Result<PriceSeries> {
    let mut prices = load_prices(input)?;
    if prices.len() != 1 {
        bail!("this command takes exactly one --input, got {}", prices.len());
    }
    Ok(prices.remove(0))
}

fn return_kind(input: &InputOpts) -> ReturnKind {
    if input.simple_returns {
        ReturnKind::Simple
    } else {
        ReturnKind::Log
    }
}

/// Prices joined on common dates, converted to returns.
fn aligned_returns(input: &InputOpts) -> Result<Vec<ReturnSeries>> {
    let prices = load_prices(input)?;
    let prices = if prices.len() > 1 { inner_join(&prices)? } else { prices };
    let kind = return_kind(input);
    prices.iter().map(|p| Ok(returns(p, kind)?)).collect()
}

fn write_series(out: &mut OutDir, s: &IndexSeries, file: &str) -> Result<SeriesEntry> {
    out.write(file, |w| s.write_csv(w))?;
    Ok(SeriesEntry::new(&s.label, file, &s.dates))
}

fn cmd_ingest(input: &InputOpts, out: &mut OutDir) -> Result<()> {
    let series = aligned_returns(input)?;
    let mut entries = Vec::new();
    for r in &series {
        let s = IndexSeries::new(r.asset_id.clone(), r.dates.clone(), r.values.clone());
        entries.push(write_series(out, &s, &format!("returns_{}.csv", r.asset_id))?);
    }
    #[derive(Serialize)]
    struct Details {
        return_kind: ReturnKind,
        series: Vec<SeriesEntry>,
    }
    finish(out, "ingest", Details { return_kind: return_kind(input), series: entries })
}

fn or_grid(values: &[usize], grid: &[usize]) -> Vec<usize> {
    if values.is_empty() {
        grid.to_vec()
    } else {
        values.to_vec()
    }
}

fn cmd_index(input: &InputOpts, opts: &IndexOpts, out: &mut OutDir) -> Result<()> {
    let pipeline = opts.pipeline.unwrap_or(Pipeline::Turbulence);
    let series = aligned_returns(input)?;
    let mut entries = Vec::new();
    match pipeline {
        Pipeline::Turbulence => {
            if series.len() != 1 {
                bail!("the turbulence pipeline takes exactly one --input, got {}", series.len());
            }
            let policy = match opts.policy.unwrap_or(Policy::Drop) {
                Policy::Drop => EssentialPolicy::DropEssential,
                Policy::CapDiameter => EssentialPolicy::CapAtDiameter,
                Policy::Reject => EssentialPolicy::Reject,
            };
            let configs: Vec<IndexConfig> = indices::grid(
                &or_grid(&opts.d, &GRID_D),
                &or_grid(&opts.tau, &GRID_TAU),
                &or_grid(&opts.w, &GRID_W),
                &or_grid(&opts.lag, &GRID_T),
                &or_grid(&opts.dim, &GRID_DIM),
            )
            .into_iter()
            .map(|c| IndexConfig { policy, max_scale: opts.max_scale, ..c })
            .collect();
            let results = turbulence_index_grid(&series[0], &configs);
            let mut done = Vec::with_capacity(configs.len());
            for (c, r) in configs.iter().zip(results) {
                done.push(r.with_context(|| format!("config {}", c.label()))?);
            }
            for (c, s) in configs.iter().zip(&done) {
                entries.push(write_series(out, s, &c.file_name())?);
            }
        }
        Pipeline::Phti => {
            let defaults = PhtiConfig::default();
            let cfg = PhtiConfig {
                window: opts.window.unwrap_or(defaults.window),
                smoothing: opts.smoothing.unwrap_or(defaults.smoothing),
                dim: opts.dim.first().copied().unwrap_or(defaults.dim),
                p_wasserstein: opts.p.unwrap_or(defaults.p_wasserstein),
                max_scale: opts.max_scale,
            };
            let (raw, smooth) = phti(&series, &cfg)?;
            entries.push(write_series(out, &raw, &format!("{}.csv", raw.label))?);
            entries.push(write_series(out, &smooth, &format!("{}.csv", smooth.label))?);
        }
        Pipeline::Correlation => {
            let window = opts.window.unwrap_or(15);
            let dim = opts.dim.first().copied().unwrap_or(0);
            let s = correlation_graph_index(&series, opts.t0.unwrap_or(window), window, dim, opts.p.unwrap_or(1))?;
            entries.push(write_series(out, &s, &format!("{}.csv", s.label))?);
        }
        Pipeline::LandscapeNorm => {
            let s = landscape_norm_index(&series, opts.window.unwrap_or(50), opts.p.unwrap_or(1))?;
            entries.push(write_series(out, &s, &format!("{}.csv", s.label))?);
            if let Some(window) = opts.variance_window {
                let v = moving_variance(&s, window)?;
                entries.push(write_series(out, &v, &format!("{}.csv", v.label))?);
            }
        }
    }
    #[derive(Serialize)]
    struct Details {
        pipeline: Pipeline,
        inputs: Vec<String>,
        series: Vec<SeriesEntry>,
    }
    let inputs = series.iter().map(|s| s.asset_id.clone()).collect();
    finish(out, "index", Details { pipeline, inputs, series: entries })
}

fn index_files(opts: &ClusterOpts) -> Result<Vec<(String, PathBuf)>> {
    let mut files: Vec<(String, PathBuf)> = opts.indices.iter().map(|p| (asset_id(p), p.clone())).collect();
    if let Some(dir) = &opts.indices_dir {
        let mut found = Vec::new();
        for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
            let path = entry?.path();
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if let Some(label) = name.strip_prefix("idx_").and_then(|n| n.strip_suffix(".csv")) {
                found.push((label.to_string(), path));
            }
        }
        found.sort();
        files.extend(found);
    }
    if files.is_empty() {
        bail!("no index files given (use --index or --indices-dir)");
    }
    Ok(files)
}

fn cmd_cluster(opts: &ClusterOpts, seed: u64, out: &mut OutDir) -> Result<()> {
    let series = index_files(opts)?
        .into_iter()
        .map(|(label, path)| {
            let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            IndexSeries::read_csv(file, &label).with_context(|| format!("parsing {}", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let set = normalize_indices(&series)?;
    let rows = set.rows.len();
    let k_min = opts.k_min.unwrap_or(1).max(1);
    let k_max = opts.k_max.unwrap_or(10).min(rows);
    let candidates: Vec<usize> = (k_min..=k_max).collect();
    let (k, curve) = match opts.k {
        Some(k) => {
            let curve = candidates
                .iter()
                .map(|&c| Ok((c, kmeans(&set.rows, c, seed)?.inertia)))
                .collect::<Result<Vec<_>>>()?;
            (k, curve)
        }
        None => {
            let elbow = elbow_select(&set.rows, &candidates, seed)?;
            (elbow.k, elbow.curve)
        }
    };
    let clusters = kmeans(&set.rows, k, seed).with_context(|| format!("clustering {rows} indices"))?;
    out.write("clusters.csv", |w| write_cluster_report(&set, &clusters, w))?;
    out.write("centroids.csv", |w| write_centroids(&set, &clusters, w))?;
    if rows >= 2 {
        let pca = pca2(&set.rows)?;
        out.write("pca.csv", |w| write_projection(&set.labels, &pca, w))?;
    }
    out.write("inertia.csv", |w| write_inertia_curve(&curve, w))?;
    if let Some(c) = opts.average_cluster {
        if c >= k {
            bail!("--average-cluster {c} is not a cluster id (k = {k})");
        }
        let members: Vec<String> = set
            .labels
            .iter()
            .zip(&clusters.assignments)
            .filter(|(_, &a)| a == c)
            .map(|(l, _)| l.clone())
            .collect();
        let avg = tdaindex::average_index(&set, &members, &format!("average_cluster{c}"))?;
        out.write("average_index.csv", |w| avg.write_csv(w))?;
    }
    #[derive(Serialize)]
    struct Details {
        seed: u64,
        k: usize,
        indices: usize,
        common_dates: usize,
        inertia: f64,
    }
    let details = Details { seed, k, indices: rows, common_dates: set.dates.len(), inertia: clusters.inertia };
    finish(out, "cluster", details)
}

fn cmd_ews(input: &InputOpts, opts: &EwsOpts, seed: u64, out: &mut OutDir) -> Result<()> {
    let prices = single_price(input)?;
    let defaults = EwsParams::default();
    let params = EwsParams {
        k: opts.k,
        seed,
        gap_tolerance: opts.gap_tolerance.unwrap_or(defaults.gap_tolerance),
        strong_threshold: opts.strong_threshold.unwrap_or(defaults.strong_threshold),
    };
    let (d, w) = (opts.d.unwrap_or(EWS_DIM), opts.w.unwrap_or(EWS_WINDOW));
    let (series, verdict) = ews_from_prices(&prices, d, w, &params)?;
    out.write("c1.csv", |wr| series.write_csv(wr))?;
    #[derive(Serialize)]
    struct Report<'a> {
        asset: &'a str,
        d: usize,
        w: usize,
        params: EwsParams,
        verdict: &'a analysis::EwsVerdict,
    }
    out.write_json("ews.json", &Report { asset: &prices.asset_id, d, w, params, verdict: &verdict })?;
    finish(out, "ews", SeriesEntry::new(&prices.asset_id, "c1.csv", &series.dates))
}

fn strategy_kind(s: StrategyArg) -> StrategyKind {
    match s {
        StrategyArg::BuyAndHold => StrategyKind::BuyAndHold,
        StrategyArg::Protection => StrategyKind::Protection,
        StrategyArg::Flexible => StrategyKind::Flexible,
        StrategyArg::Leverage => StrategyKind::Leverage,
    }
}

fn cmd_backtest(input: &InputOpts, opts: &BacktestOpts, out: &mut OutDir) -> Result<()> {
    let prices = single_price(input)?;
    let monthly = monthly_returns(&prices)?;
    let lookback = opts.lookback.unwrap_or(DEFAULT_LOOKBACK);
    let kinds: Vec<StrategyKind> = if opts.strategies.is_empty() {
        StrategyKind::ALL.to_vec()
    } else {
        opts.strategies.iter().copied().map(strategy_kind).collect()
    };
    let needs_index = kinds.iter().any(|k| *k != StrategyKind::BuyAndHold);
    let (index, traded) = match &opts.index {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let daily = IndexSeries::read_csv(file, &asset_id(path)).with_context(|| format!("parsing {}", path.display()))?;
            let index = monthly_last(&daily);
            let traded = tradable_months(&monthly, &index, lookback)?;
            (index, traded)
        }
        None if needs_index => bail!("strategies other than buy-and-hold need --index"),
        None => (IndexSeries::new("none", Vec::new(), Vec::new()), monthly.clone()),
    };
    let mut columns = Vec::new();
    for kind in kinds {
        let spec = StrategySpec { kind, lookback };
        let res = run_strategy(&traded, &index, &spec).with_context(|| format!("strategy {}", kind.name()))?;
        out.write(&format!("equity_{}.csv", kind.name()), |w| write_equity_curve(&res, w))?;
        columns.push((kind.name().to_string(), performance(&res)?));
    }
    out.write("report.csv", |w| write_report(&columns, w))?;
    #[derive(Serialize)]
    struct Details {
        lookback: usize,
        months: usize,
        first_month: Option<String>,
        last_month: Option<String>,
    }
    let fmt = |d: &NaiveDate| d.format(DATE_FORMAT).to_string();
    let details = Details {
        lookback,
        months: traded.len(),
        first_month: traded.dates.first().map(fmt),
        last_month: traded.dates.last().map(fmt),
    };
    finish(out, "backtest", details)
}

/// Months whose previous month closes a full `lookback` of index values.
fn tradable_months(monthly: &ReturnSeries, index: &IndexSeries, lookback: usize) -> Result<ReturnSeries> {
    if index.len() < lookback {
        return Err(tdaindex::Error::InsufficientHistory { have: index.len(), need: lookback }.into());
    }
    let first = index.dates[lookback - 1];
    let last = *index.dates.last().unwrap();
    let key = |d: &NaiveDate| (d.format("%Y-%m").to_string(), *d);
    let (first_key, last_key) = (key(&first).0, key(&last).0);
    let keep: Vec<usize> = (0..monthly.len())
        .filter(|&i| {
            let prev = monthly.dates[i].checked_sub_months(chrono::Months::new(1)).unwrap();
            let k = key(&prev).0;
            k >= first_key && k <= last_key
        })
        .collect();
    if keep.is_empty() {
        return Err(tdaindex::Error::Misalignment("no return month follows a full index history".into()).into());
    }
    Ok(ReturnSeries::new(
        monthly.asset_id.clone(),
        keep.iter().map(|&i| monthly.dates[i]).collect(),
        keep.iter().map(|&i| monthly.values[i]).collect(),
    ))
}

fn cmd_plotdata(input: &InputOpts, opts: &PlotOpts, out: &mut OutDir) -> Result<()> {
    let prices = single_price(input)?;
    let Some(path) = &opts.index else {
        bail!("plotdata needs --index");
    };
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let index = IndexSeries::read_csv(file, &asset_id(path)).with_context(|| format!("parsing {}", path.display()))?;
    let mut rows: Vec<(NaiveDate, f64, f64)> = Vec::new();
    let mut j = 0;
    for (d, v) in index.dates.iter().zip(&index.values) {
        while j < prices.dates.len() && prices.dates[j] < *d {
            j += 1;
        }
        if j < prices.dates.len() && prices.dates[j] == *d {
            rows.push((*d, prices.closes[j], *v));
        }
    }
    if rows.is_empty() {
        return Err(tdaindex::Error::EmptyIntersection.into());
    }
    out.write("plot.csv", |w| {
        writeln!(w, "date,price,index_value")?;
        for (d, p, v) in &rows {
            writeln!(w, "{},{},{}", d.format(DATE_FORMAT), p, v)?;
        }
        Ok(())
    })?;
    let crash = match &opts.crash_date {
        Some(text) => {
            let date = NaiveDate::parse_from_str(text, DATE_FORMAT).with_context(|| format!("bad --crash-date {text:?}"))?;
            match rows.iter().position(|r| r.0 >= date) {
                Some(i) => Some(i),
                None => bail!("--crash-date {text} is after the last plotted date"),
            }
        }
        None => None,
    };
    if opts.svg {
        let price: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let values: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let first = rows[0].0.format(DATE_FORMAT).to_string();
        let last = rows[rows.len() - 1].0.format(DATE_FORMAT).to_string();
        let doc = svg::render((&prices.asset_id, &index.label), &price, &values, crash, &first, &last);
        out.write("plot.svg", |w| w.write_all(doc.as_bytes()))?;
    }
    let dates: Vec<NaiveDate> = rows.iter().map(|r| r.0).collect();
    finish(out, "plotdata", SeriesEntry::new(&index.label, "plot.csv", &dates))
}
