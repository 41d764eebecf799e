//! Vietoris–Rips filtrations.

use std::cmp::Ordering;
use std::io::{self, Write};

use smallvec::SmallVec;

use crate::embedding::PointCloud;
use crate::error::{Error, Result};

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major entries, checking symmetry, zero
    /// diagonal and non-negativity.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let a = entries[i * n + j];
                if !(a >= 0.0) || a != entries[j * n + i] {
                    return Err(Error::InvalidParameter(format!(
                        "entries ({i},{j}) must be equal and non-negative"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Euclidean distances between the points of a cloud.
pub fn distance_matrix(cloud: &PointCloud) -> DistanceMatrix {
    distance_matrix_of(&cloud.points)
}

pub fn distance_matrix_of(points: &[Vec<f64>]) -> DistanceMatrix {
    let n = points.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

pub type Vertices = SmallVec<[u32; 4]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    /// Sorted ascending.
    pub vertices: Vertices,
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

fn filtration_order(a: &Simplex, b: &Simplex) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

/// Simplices sorted by (value, dimension, lexicographic vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub simplices: Vec<Simplex>,
    pub max_dim: usize,
    pub vertex_count: usize,
}

impl Filtration {
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// True when every simplex on the vertex set is present, i.e. expanding
    /// further would add nothing.
    pub fn is_complete(&self) -> bool {
        self.max_dim + 1 >= self.vertex_count
    }

    pub fn count_of_dim(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim() == dim).count()
    }

    /// Writes `value dim v0 v1 ...` per simplex, in filtration order.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for s in &self.simplices {
            write!(out, "{} {}", s.value, s.dim())?;
            for v in &s.vertices {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Full Rips filtration up to `max_dim`.
pub fn vr_filtration(dm: &DistanceMatrix, max_dim: usize) -> Result<Filtration> {
    vr_filtration_capped(dm, max_dim, None)
}

/// Rips filtration up to `max_dim`, keeping only simplices whose value does
/// not exceed `max_scale`.
pub fn vr_filtration_capped(
    dm: &DistanceMatrix,
    max_dim: usize,
    max_scale: Option<f64>,
) -> Result<Filtration> {
    let n = dm.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if max_dim >= n {
        return Err(Error::DimensionTooLarge { max_dim, points: n });
    }
    let cap = max_scale.unwrap_or(f64::INFINITY);
    let mut simplices: Vec<Simplex> = (0..n as u32)
        .map(|v| Simplex { vertices: SmallVec::from_slice(&[v]), value: 0.0 })
        .collect();
    let mut stack: Vec<u32> = Vec::with_capacity(max_dim + 1);
    for v in 0..n {
        stack.push(v as u32);
        expand(dm, max_dim, cap, &mut stack, 0.0, &mut simplices);
        stack.pop();
    }
    simplices.sort_unstable_by(filtration_order);
    Ok(Filtration { simplices, max_dim, vertex_count: n })
}

fn expand(
    dm: &DistanceMatrix,
    max_dim: usize,
    cap: f64,
    stack: &mut Vec<u32>,
    value: f64,
    out: &mut Vec<Simplex>,
) {
    if stack.len() > max_dim {
        return;
    }
    let last = *stack.last().unwrap() as usize;
    for next in last + 1..dm.len() {
        let v = stack
            .iter()
            .fold(value, |acc, &u| acc.max(dm.get(u as usize, next)));
        if v > cap {
            continue;
        }
        stack.push(next as u32);
        out.push(Simplex { vertices: SmallVec::from_slice(stack), value: v });
        expand(dm, max_dim, cap, stack, v, out);
        stack.pop();
    }
}
