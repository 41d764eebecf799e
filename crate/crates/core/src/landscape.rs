//! Persistence landscapes stored exactly as piecewise-linear layers.
//!
//! Layer `k` is the pointwise k-th largest tent function of the diagram.
//! Between two consecutive candidate breakpoints (births, deaths, tent peaks
//! and crossings of a rising edge with a falling edge) the order of the
//! tents cannot change, so every layer is linear there and evaluating the
//! k-th maximum at the breakpoints is exact.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// What to do with classes that never die.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EssentialPolicy {
    /// Drop infinite pairs before building the landscape.
    #[default]
    DropEssential,
    /// Replace infinite deaths by a fixed value.
    CapAt(f64),
    /// Replace infinite deaths by the diameter of the cloud; resolve with
    /// [`EssentialPolicy::resolved`] before building.
    CapAtDiameter,
    /// Fail when an infinite pair is present.
    Reject,
}

impl EssentialPolicy {
    /// Turns `CapAtDiameter` into a concrete cap.
    pub fn resolved(self, diameter: f64) -> Self {
        match self {
            EssentialPolicy::CapAtDiameter => EssentialPolicy::CapAt(diameter),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceLandscape {
    /// Critical points `(x, y)` of each layer, x ascending, starting and
    /// ending at y = 0. The function is zero outside.
    pub layers: Vec<Vec<(f64, f64)>>,
}

fn tent(b: f64, d: f64, x: f64) -> f64 {
    if x <= b || x >= d {
        0.0
    } else {
        (x - b).min(d - x)
    }
}

/// Value of a piecewise-linear layer at `x`.
fn eval_layer(layer: &[(f64, f64)], x: f64) -> f64 {
    let Some(first) = layer.first() else {
        return 0.0;
    };
    if x <= first.0 || x >= layer[layer.len() - 1].0 {
        return 0.0;
    }
    let i = layer.partition_point(|p| p.0 <= x);
    let (x0, y0) = layer[i - 1];
    let (x1, y1) = layer[i];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
    let scale = (c.0 - a.0).abs().max(1e-300) * (a.1.abs() + b.1.abs() + c.1.abs() + 1.0);
    cross.abs() <= 1e-12 * scale
}

/// Drops interior points of zero runs and collinear interior points.
fn simplify(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let Some(first_pos) = points.iter().position(|p| p.1 > 0.0) else {
        return Vec::new();
    };
    let last_pos = points.iter().rposition(|p| p.1 > 0.0).unwrap();
    let lo = first_pos.saturating_sub(1);
    let hi = (last_pos + 1).min(points.len() - 1);
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(hi - lo + 1);
    for &p in &points[lo..=hi] {
        while out.len() >= 2 && collinear(out[out.len() - 2], out[out.len() - 1], p) {
            out.pop();
        }
        out.push(p);
    }
    out
}

impl PersistenceLandscape {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn is_zero(&self) -> bool {
        self.layers.is_empty()
    }

    /// `lambda_k(x)` with `k` counted from 1.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        match k.checked_sub(1).and_then(|i| self.layers.get(i)) {
            Some(layer) => eval_layer(layer, x),
            None => 0.0,
        }
    }

    /// Writes CSV with header `layer,x,y`, layers numbered from 1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "layer,x,y")?;
        for (k, layer) in self.layers.iter().enumerate() {
            for (x, y) in layer {
                writeln!(out, "{},{},{}", k + 1, x, y)?;
            }
        }
        Ok(())
    }
}

/// Builds the landscape of a diagram; essential pairs are handled by `policy`.
pub fn landscape_from_diagram(
    p: &PersistenceDiagram,
    policy: EssentialPolicy,
) -> Result<PersistenceLandscape> {
    let mut tents: Vec<(f64, f64)> = Vec::with_capacity(p.size());
    for (b, d) in p.points() {
        let d = if d.is_infinite() {
            match policy {
                EssentialPolicy::DropEssential => continue,
                EssentialPolicy::CapAt(cap) => cap.max(b),
                EssentialPolicy::CapAtDiameter => {
                    return Err(Error::InvalidParameter(
                        "cap-at-diameter policy must be resolved against a cloud".into(),
                    ))
                }
                EssentialPolicy::Reject => return Err(Error::InfinitePairPresent),
            }
        } else {
            d
        };
        if d > b {
            tents.push((b, d));
        }
    }
    Ok(landscape_from_tents(&tents))
}

fn landscape_from_tents(tents: &[(f64, f64)]) -> PersistenceLandscape {
    if tents.is_empty() {
        return PersistenceLandscape::default();
    }
    let mut xs: Vec<f64> = Vec::with_capacity(tents.len() * 3);
    for &(b, d) in tents {
        xs.extend([b, d, (b + d) / 2.0]);
    }
    for &(bi, di) in tents {
        let mi = (bi + di) / 2.0;
        for &(bj, dj) in tents {
            let mj = (bj + dj) / 2.0;
            // rising edge of i meets falling edge of j
            let x = (bi + dj) / 2.0;
            if x > bi && x < mi && x > mj && x < dj {
                xs.push(x);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    // number of layers = maximal overlap of the open supports
    let mut events: Vec<(f64, i32)> = tents.iter().flat_map(|&(b, d)| [(b, 1), (d, -1)]).collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut depth = 0i32;
    let mut layers_needed = 0i32;
    for (_, e) in events {
        depth += e;
        layers_needed = layers_needed.max(depth);
    }
    let layers_needed = layers_needed as usize;

    let mut columns: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(xs.len()); layers_needed];
    let mut values: Vec<f64> = Vec::with_capacity(tents.len());
    for &x in &xs {
        values.clear();
        values.extend(tents.iter().map(|&(b, d)| tent(b, d, x)));
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        for (k, col) in columns.iter_mut().enumerate() {
            col.push((x, values.get(k).copied().unwrap_or(0.0)));
        }
    }
    let layers = columns.into_iter().map(simplify).filter(|l| !l.is_empty()).collect();
    PersistenceLandscape { layers }
}

/// `integral of |g|^p` over a segment where `g` is linear with endpoint
/// values of the same sign.
fn segment_power_integral(width: f64, y0: f64, y1: f64, p: u32) -> f64 {
    let (a, b) = (y0.abs(), y1.abs());
    let mut acc = 0.0;
    for i in 0..=p {
        acc += a.powi(i as i32) * b.powi((p - i) as i32);
    }
    width * acc / (p + 1) as f64
}

fn signed_power_integral(x0: f64, x1: f64, g0: f64, g1: f64, p: u32) -> f64 {
    if g0 * g1 >= 0.0 {
        segment_power_integral(x1 - x0, g0, g1, p)
    } else {
        let xc = x0 + (x1 - x0) * g0 / (g0 - g1);
        segment_power_integral(xc - x0, g0, 0.0, p) + segment_power_integral(x1 - xc, 0.0, g1, p)
    }
}

/// `(sum_k ||lambda_k||_p^p)^(1/p)`, integrated exactly segment by segment.
pub fn lp_norm(l: &PersistenceLandscape, p: u32) -> f64 {
    assert!(p >= 1, "L^p norm needs p >= 1");
    let total: f64 = l
        .layers
        .iter()
        .flat_map(|layer| layer.windows(2))
        .map(|w| segment_power_integral(w[1].0 - w[0].0, w[0].1, w[1].1, p))
        .sum();
    total.powf(1.0 / p as f64)
}

/// L^p norm of the layerwise difference; missing layers count as zero.
pub fn landscape_distance(a: &PersistenceLandscape, b: &PersistenceLandscape, p: u32) -> f64 {
    assert!(p >= 1, "L^p distance needs p >= 1");
    let empty: Vec<(f64, f64)> = Vec::new();
    let mut total = 0.0;
    let mut xs: Vec<f64> = Vec::new();
    for k in 0..a.layers.len().max(b.layers.len()) {
        let la = a.layers.get(k).unwrap_or(&empty);
        let lb = b.layers.get(k).unwrap_or(&empty);
        xs.clear();
        xs.extend(la.iter().chain(lb).map(|pt| pt.0));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for w in xs.windows(2) {
            let g0 = eval_layer(la, w[0]) - eval_layer(lb, w[0]);
            let g1 = eval_layer(la, w[1]) - eval_layer(lb, w[1]);
            total += signed_power_integral(w[0], w[1], g0, g1, p);
        }
    }
    total.powf(1.0 / p as f64)
}

/// `n[t] + |n[t] - n[t-1]|` for each t from the second element on.
pub fn c1_series(norms: &[f64]) -> Result<Vec<f64>> {
    if norms.len() < 2 {
        return Err(Error::TooShort { have: norms.len(), need: 2 });
    }
    Ok(norms.windows(2).map(|w| w[1] + (w[1] - w[0]).abs()).collect())
}
