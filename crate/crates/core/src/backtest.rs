//! Quintile-driven monthly allocation strategies.

use std::io::{self, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::IndexSeries;
use crate::marketdata::{PriceSeries, ReturnSeries, DATE_FORMAT};

pub const DEFAULT_LOOKBACK: usize = 60;
const MIN_MONTHS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    /// Fully invested unless the index sits in its top quintile.
    Protection,
    /// `100 - 20(n-1)` percent invested.
    Flexible,
    /// `120 - 5n(n-1)` percent invested.
    Leverage,
    BuyAndHold,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] =
        [StrategyKind::BuyAndHold, StrategyKind::Protection, StrategyKind::Flexible, StrategyKind::Leverage];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Protection => "protection",
            StrategyKind::Flexible => "flexible",
            StrategyKind::Leverage => "leverage",
            StrategyKind::BuyAndHold => "buy_and_hold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub lookback: usize,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        StrategySpec { kind, lookback: DEFAULT_LOOKBACK }
    }
}

/// Percentile of sorted data with linear interpolation between order
/// statistics, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quintile (1..=5) of `latest` relative to `history`.
pub fn quintile_of(history: &[f64], latest: f64) -> Result<u8> {
    if history.len() < 5 {
        return Err(Error::BadLookback(history.len()));
    }
    let mut sorted = history.to_vec();
    sorted.sort_by(f64::total_cmp);
    for n in 1..=4u8 {
        if latest <= percentile(&sorted, f64::from(n) * 0.2) {
            return Ok(n);
        }
    }
    Ok(5)
}

/// Percentage of equity invested for quintile `n`.
pub fn exposure(kind: StrategyKind, n: u8) -> Result<f64> {
    if !(1..=5).contains(&n) {
        return Err(Error::BadQuintile(n));
    }
    let n = f64::from(n);
    Ok(match kind {
        StrategyKind::Protection => if n < 5.0 { 100.0 } else { 0.0 },
        StrategyKind::Flexible => 100.0 - 20.0 * (n - 1.0),
        StrategyKind::Leverage => 120.0 - 5.0 * n * (n - 1.0),
        StrategyKind::BuyAndHold => 100.0,
    })
}

fn month_key(d: NaiveDate) -> i32 {
    d.year() * 12 + d.month0() as i32
}

fn last_per_month(dates: &[NaiveDate], values: &[f64]) -> (Vec<NaiveDate>, Vec<f64>) {
    let mut out_d: Vec<NaiveDate> = Vec::new();
    let mut out_v: Vec<f64> = Vec::new();
    for (d, v) in dates.iter().zip(values) {
        match out_d.last() {
            Some(last) if month_key(*last) == month_key(*d) => {
                *out_d.last_mut().unwrap() = *d;
                *out_v.last_mut().unwrap() = *v;
            }
            _ => {
                out_d.push(*d);
                out_v.push(*v);
            }
        }
    }
    (out_d, out_v)
}

/// Last value of each calendar month.
pub fn monthly_last(s: &IndexSeries) -> IndexSeries {
    let (dates, values) = last_per_month(&s.dates, &s.values);
    IndexSeries::new(s.label.clone(), dates, values)
}

/// Simple returns between consecutive month-end closes, dated by the later
/// month end.
pub fn monthly_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    let (dates, closes) = last_per_month(&p.dates, &p.closes);
    if closes.len() < 2 {
        return Err(Error::TooShort { have: closes.len(), need: 2 });
    }
    let values = closes.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    Ok(ReturnSeries::new(p.asset_id.clone(), dates[1..].to_vec(), values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub spec: StrategySpec,
    pub months: Vec<NaiveDate>,
    /// Percent of equity invested in each month.
    pub exposures: Vec<f64>,
    pub returns: Vec<f64>,
    /// Starts at 1.0; one more entry than `months`.
    pub equity: Vec<f64>,
}

/// Trades month `m` with the exposure implied by the quintile of the index
/// value at the end of month `m-1` among the `lookback` values ending there.
pub fn run_strategy(monthly_returns: &ReturnSeries, index_monthly: &IndexSeries, spec: &StrategySpec) -> Result<StrategyResult> {
    if spec.lookback < 5 {
        return Err(Error::BadLookback(spec.lookback));
    }
    let exposures = if spec.kind == StrategyKind::BuyAndHold {
        vec![100.0; monthly_returns.len()]
    } else {
        let keys: Vec<i32> = index_monthly.dates.iter().map(|d| month_key(*d)).collect();
        if keys.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::Misalignment("index must hold one value per consecutive month".into()));
        }
        monthly_returns
            .dates
            .iter()
            .map(|d| {
                let prev = month_key(*d) - 1;
                let Some(pos) = keys.iter().position(|&k| k == prev) else {
                    return Err(match keys.first() {
                        Some(&first) if prev >= first => {
                            Error::Misalignment(format!("no index value for the month before {d}"))
                        }
                        _ => Error::InsufficientHistory { have: 0, need: spec.lookback },
                    });
                };
                if pos + 1 < spec.lookback {
                    return Err(Error::InsufficientHistory { have: pos + 1, need: spec.lookback });
                }
                let history = &index_monthly.values[pos + 1 - spec.lookback..=pos];
                exposure(spec.kind, quintile_of(history, index_monthly.values[pos])?)
            })
            .collect::<Result<Vec<_>>>()?
    };
    let returns: Vec<f64> = exposures.iter().zip(&monthly_returns.values).map(|(e, r)| e / 100.0 * r).collect();
    let mut equity = Vec::with_capacity(returns.len() + 1);
    equity.push(1.0);
    for r in &returns {
        equity.push(equity.last().unwrap() * (1.0 + r));
    }
    Ok(StrategyResult { spec: *spec, months: monthly_returns.dates.clone(), exposures, returns, equity })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Performance {
    /// Annualized mean return, percent.
    pub mu: f64,
    /// Annualized standard deviation, percent.
    pub sigma: f64,
    /// `mu / sigma`; NaN when `sigma` is zero.
    pub sharpe: f64,
    /// Maximum drawdown, percent.
    pub max_drawdown: f64,
}

/// Largest relative drop from a running peak, in percent.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &e in equity {
        peak = peak.max(e);
        if peak > 0.0 {
            worst = worst.max((peak - e) / peak);
        }
    }
    worst * 100.0
}

pub fn performance(result: &StrategyResult) -> Result<Performance> {
    let r = &result.returns;
    if r.len() < MIN_MONTHS {
        return Err(Error::TooShort { have: r.len(), need: MIN_MONTHS });
    }
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mu = 12.0 * mean * 100.0;
    let sigma = 12f64.sqrt() * var.sqrt() * 100.0;
    Ok(Performance { mu, sigma, sharpe: mu / sigma, max_drawdown: max_drawdown(&result.equity) })
}

/// Rows `mu`, `sigma`, `SR`, `maxDD`; one column per named result.
pub fn write_report<W: Write>(columns: &[(String, Performance)], mut out: W) -> io::Result<()> {
    write!(out, "measure")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    let rows: [(&str, fn(&Performance) -> f64); 4] = [
        ("mu", |p| p.mu),
        ("sigma", |p| p.sigma),
        ("SR", |p| p.sharpe),
        ("maxDD", |p| p.max_drawdown),
    ];
    for (label, get) in rows {
        write!(out, "{label}")?;
        for (_, p) in columns {
            write!(out, ",{}", get(p))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `month,exposure,return,equity`, equity measured after the month.
pub fn write_equity_curve<W: Write>(result: &StrategyResult, mut out: W) -> io::Result<()> {
    writeln!(out, "month,exposure,return,equity")?;
    for i in 0..result.months.len() {
        writeln!(
            out,
            "{},{},{},{}",
            result.months[i].format(DATE_FORMAT),
            result.exposures[i],
            result.returns[i],
            result.equity[i + 1]
        )?;
    }
    Ok(())
}
