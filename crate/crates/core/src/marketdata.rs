//! Price ingestion and return series.

use std::collections::BTreeSet;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Daily closing prices of one asset, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub asset_id: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
}

/// Per-period returns of one asset, dated by the later of the two prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub asset_id: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} dates but {} closes",
                dates.len(),
                closes.len()
            )));
        }
        if dates.len() < 2 {
            return Err(Error::TooShort { have: dates.len(), need: 2 });
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::DuplicateDate(w[1]));
            }
        }
        for (i, &c) in closes.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::NonPositivePrice { line: i as u64 + 2, value: c });
            }
        }
        Ok(PriceSeries { asset_id: asset_id.into(), dates, closes })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

impl ReturnSeries {
    pub fn new(asset_id: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Self {
        debug_assert_eq!(dates.len(), values.len());
        ReturnSeries { asset_id: asset_id.into(), dates, values }
    }

    /// A series with synthetic consecutive daily dates, handy for tests and
    /// for callers that only have raw numbers.
    pub fn from_values(asset_id: impl Into<String>, values: Vec<f64>) -> Self {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let dates = start.iter_days().take(values.len()).collect();
        ReturnSeries::new(asset_id, dates, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Column names used to read a price CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub close_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema { date_column: "date".into(), close_column: "close".into() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Fill missing or NaN closes from the previous close instead of failing.
    pub forward_fill: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnKind {
    #[default]
    Log,
    Simple,
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.trim().to_ascii_lowercase().as_str(),
        "" | "nan" | "na" | "n/a" | "null" | "none"
    )
}

/// Parses a price CSV with a header row. Rows may arrive in any date order;
/// they are sorted ascending.
pub fn parse_price_csv<R: Read>(
    reader: R,
    asset_id: &str,
    schema: &CsvSchema,
    opts: ParseOptions,
) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedRow { line: 1, reason: e.to_string() })?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MalformedRow {
            line: 1,
            reason: format!("missing column {name:?}"),
        })
    };
    let date_idx = column(&schema.date_column)?;
    let close_idx = column(&schema.close_column)?;

    // (date, close or None for a gap, source line)
    let mut rows: Vec<(NaiveDate, Option<f64>, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let (Some(date_raw), Some(close_raw)) = (record.get(date_idx), record.get(close_idx)) else {
            return Err(Error::MalformedRow { line, reason: "missing field".into() });
        };
        let date = NaiveDate::parse_from_str(date_raw, DATE_FORMAT).map_err(|e| {
            Error::MalformedRow { line, reason: format!("bad date {date_raw:?}: {e}") }
        })?;
        let close = if is_missing(close_raw) {
            None
        } else {
            let v: f64 = close_raw.parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("bad close {close_raw:?}"),
            })?;
            if v.is_nan() {
                None
            } else if !(v > 0.0) || v.is_infinite() {
                return Err(Error::NonPositivePrice { line, value: v });
            } else {
                Some(v)
            }
        };
        rows.push((date, close, line));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateDate(w[1].0));
        }
    }

    let mut closes = Vec::with_capacity(rows.len());
    let mut last: Option<f64> = None;
    for &(_, close, line) in &rows {
        let value = match (close, last) {
            (Some(v), _) => v,
            (None, Some(prev)) if opts.forward_fill => prev,
            (None, _) => return Err(Error::MissingValue { line }),
        };
        closes.push(value);
        last = Some(value);
    }
    let dates = rows.iter().map(|r| r.0).collect::<Vec<_>>();
    if dates.len() < 2 {
        return Err(Error::TooShort { have: dates.len(), need: 2 });
    }
    Ok(PriceSeries { asset_id: asset_id.to_string(), dates, closes })
}

/// `ln(p[i+1] / p[i])`, dated by the later day.
pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    returns(p, ReturnKind::Log)
}

pub fn returns(p: &PriceSeries, kind: ReturnKind) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::TooShort { have: p.len(), need: 2 });
    }
    let values = p
        .closes
        .windows(2)
        .map(|w| match kind {
            ReturnKind::Log => (w[1] / w[0]).ln(),
            ReturnKind::Simple => w[1] / w[0] - 1.0,
        })
        .collect();
    Ok(ReturnSeries::new(p.asset_id.clone(), p.dates[1..].to_vec(), values))
}

/// Restricts every series to the dates present in all of them.
pub fn inner_join(series: &[PriceSeries]) -> Result<Vec<PriceSeries>> {
    let Some(first) = series.first() else {
        return Err(Error::EmptyInput);
    };
    let mut common: BTreeSet<NaiveDate> = first.dates.iter().copied().collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    if common.len() < 2 {
        return Err(Error::EmptyIntersection);
    }
    Ok(series
        .iter()
        .map(|s| {
            let (dates, closes) = s
                .dates
                .iter()
                .zip(&s.closes)
                .filter(|(d, _)| common.contains(d))
                .map(|(d, c)| (*d, *c))
                .unzip();
            PriceSeries { asset_id: s.asset_id.clone(), dates, closes }
        })
        .collect())
}

/// Checks that all series share exactly the same date axis.
pub fn check_aligned(series: &[ReturnSeries]) -> Result<()> {
    let Some(first) = series.first() else {
        return Err(Error::EmptyInput);
    };
    for s in &series[1..] {
        if let Some(i) = (0..first.len().max(s.len()))
            .find(|&i| first.dates.get(i) != s.dates.get(i))
        {
            let date = first.dates.get(i).or(s.dates.get(i)).copied().unwrap();
            return Err(Error::DateMisalignment(date));
        }
    }
    Ok(())
}
