//! Command options, shared between clap flags and the JSON config file.
//!
//! Every option is optional on both sides; [`Merge`] fills gaps in the
//! command-line values from the config file, and the command falls back to
//! built-in defaults for whatever is still unset.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

pub trait Merge {
    /// Keeps `self` where set, otherwise takes `other`.
    fn merge(self, other: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ident { $($opt:ident),* } { $($list:ident),* } { $($flag:ident),* }) => {
        impl Merge for $ty {
            fn merge(self, other: Self) -> Self {
                $ty {
                    $($opt: self.$opt.or(other.$opt),)*
                    $($list: if self.$list.is_empty() { other.$list } else { self.$list },)*
                    $($flag: self.$flag || other.$flag,)*
                }
            }
        }
    };
}

/// Top-level JSON document accepted by `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub input: InputOpts,
    pub ingest: IngestOpts,
    pub index: IndexOpts,
    pub cluster: ClusterOpts,
    pub ews: EwsOpts,
    pub backtest: BacktestOpts,
    pub plotdata: PlotOpts,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputOpts {
    /// Price CSV files (one asset per file).
    #[arg(long = "input", short = 'i')]
    pub inputs: Vec<PathBuf>,
    /// Name of the date column.
    #[arg(long)]
    pub date_column: Option<String>,
    /// Name of the closing-price column.
    #[arg(long)]
    pub close_column: Option<String>,
    /// Fill missing closes with the previous close instead of failing.
    #[arg(long)]
    pub forward_fill: bool,
    /// Use simple instead of log returns.
    #[arg(long)]
    pub simple_returns: bool,
}
merge_fields!(InputOpts { date_column, close_column } { inputs } { forward_fill, simple_returns });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestOpts {}

impl Merge for IngestOpts {
    fn merge(self, _: Self) -> Self {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Landscape distance over a parameter grid (one asset).
    Turbulence,
    /// Smoothed Wasserstein distances of multi-asset windows.
    Phti,
    /// Correlation-graph diagrams against a reference day.
    Correlation,
    /// L^p norms of H1 landscapes of multi-asset windows.
    LandscapeNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Drop,
    CapDiameter,
    Reject,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexOpts {
    #[arg(long, value_enum)]
    pub pipeline: Option<Pipeline>,
    /// Embedding dimensions (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<usize>,
    /// Embedding delays.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<usize>,
    /// Point-cloud sizes.
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<usize>,
    /// Landscape lags `T`.
    #[arg(long = "lag", value_delimiter = ',')]
    #[serde(rename = "T")]
    pub lag: Vec<usize>,
    /// Homology dimensions (0, 1).
    #[arg(long, value_delimiter = ',')]
    pub dim: Vec<usize>,
    /// Treatment of infinite bars in landscapes.
    #[arg(long, value_enum)]
    pub policy: Option<Policy>,
    /// Largest filtration value (default: cloud diameter).
    #[arg(long)]
    pub max_scale: Option<f64>,
    /// Order of the Wasserstein distance or landscape norm.
    #[arg(long)]
    pub p: Option<u32>,
    /// Window length for phti, correlation and landscape-norm.
    #[arg(long)]
    pub window: Option<usize>,
    /// Trailing-mean length for phti.
    #[arg(long)]
    pub smoothing: Option<usize>,
    /// Reference day (row of the aligned returns) for correlation.
    #[arg(long)]
    pub t0: Option<usize>,
    /// Also write a moving variance of the landscape-norm index.
    #[arg(long)]
    pub variance_window: Option<usize>,
}
merge_fields!(IndexOpts { pipeline, policy, max_scale, p, window, smoothing, t0, variance_window } { d, tau, w, lag, dim } {});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterOpts {
    /// Directory holding `idx_*.csv` files.
    #[arg(long)]
    pub indices_dir: Option<PathBuf>,
    /// Individual index CSV files.
    #[arg(long = "index")]
    pub indices: Vec<PathBuf>,
    /// Number of clusters (default: elbow rule).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Cluster whose members are averaged into `average_index.csv`.
    #[arg(long)]
    pub average_cluster: Option<usize>,
}
merge_fields!(ClusterOpts { indices_dir, k, k_min, k_max, average_cluster } { indices } {});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EwsOpts {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub w: Option<usize>,
    /// Number of clusters (default: elbow rule).
    #[arg(long)]
    pub k: Option<usize>,
    /// Largest gap between high points of an almost contiguous run.
    #[arg(long)]
    pub gap_tolerance: Option<usize>,
    /// Fraction of high points above which a signal is strong.
    #[arg(long)]
    pub strong_threshold: Option<f64>,
}
merge_fields!(EwsOpts { d, w, k, gap_tolerance, strong_threshold } {} {});

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    BuyAndHold,
    Protection,
    Flexible,
    Leverage,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestOpts {
    /// Daily index CSV (`date,value`), sampled at month ends.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Strategies to run (default: all four).
    #[arg(long = "strategy", value_enum, value_delimiter = ',')]
    pub strategies: Vec<StrategyArg>,
    /// Number of monthly index values forming the quintile history.
    #[arg(long)]
    pub lookback: Option<usize>,
}
merge_fields!(BacktestOpts { index, lookback } { strategies } {});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotOpts {
    /// Index CSV (`date,value`).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Draw a dashed marker at this date (YYYY-MM-DD).
    #[arg(long)]
    pub crash_date: Option<String>,
    /// Also write `plot.svg`.
    #[arg(long)]
    pub svg: bool,
}
merge_fields!(PlotOpts { index, crash_date } {} { svg });
