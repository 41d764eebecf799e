//! Wasserstein and bottleneck distances between persistence diagrams.
//!
//! The infinitely many diagonal points are reduced to a finite square
//! assignment problem: every point of one diagram may be matched either to a
//! point of the other diagram or to its own projection on the diagonal, and
//! the leftover diagonal slots pair up with each other at zero cost.
//! Essential classes are matched separately by birth order.

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

fn sup_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// Sup-norm distance from a point to the diagonal.
fn diagonal_dist(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Square cost matrix of the augmented matching, under the sup-norm ground
/// distance. Rows are the left points followed by one diagonal slot per
/// right point; columns are the right points followed by one diagonal slot
/// per left point.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingProblem {
    pub left: Vec<(f64, f64)>,
    pub right: Vec<(f64, f64)>,
    size: usize,
    cost: Vec<f64>,
}

impl MatchingProblem {
    pub fn new(left: Vec<(f64, f64)>, right: Vec<(f64, f64)>) -> Self {
        let (nl, nr) = (left.len(), right.len());
        let size = nl + nr;
        let mut cost = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                cost[i * size + j] = match (i < nl, j < nr) {
                    (true, true) => sup_dist(left[i], right[j]),
                    (true, false) => diagonal_dist(left[i]),
                    (false, true) => diagonal_dist(right[j]),
                    (false, false) => 0.0,
                };
            }
        }
        MatchingProblem { left, right, size, cost }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.size + j]
    }

    /// Minimal total of `cost^p` over perfect matchings.
    pub fn min_power_cost(&self, p: u32) -> f64 {
        let weights: Vec<f64> = self.cost.iter().map(|c| c.powi(p as i32)).collect();
        let assignment = hungarian(self.size, &weights);
        assignment.iter().enumerate().map(|(i, &j)| weights[i * self.size + j]).sum()
    }

    /// Smallest `t` such that a perfect matching uses only costs `<= t`.
    pub fn min_bottleneck(&self) -> f64 {
        if self.size == 0 {
            return 0.0;
        }
        let mut candidates = self.cost.clone();
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        let (mut lo, mut hi) = (0, candidates.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.has_perfect_matching(candidates[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        candidates[lo]
    }

    fn has_perfect_matching(&self, threshold: f64) -> bool {
        let n = self.size;
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| self.cost(i, j) <= threshold).collect())
            .collect();
        let mut match_col: Vec<Option<usize>> = vec![None; n];
        for row in 0..n {
            let mut seen = vec![false; n];
            if !augment(row, &adj, &mut seen, &mut match_col) {
                return false;
            }
        }
        true
    }
}

fn augment(row: usize, adj: &[Vec<usize>], seen: &mut [bool], match_col: &mut [Option<usize>]) -> bool {
    for &col in &adj[row] {
        if seen[col] {
            continue;
        }
        seen[col] = true;
        let free = match match_col[col] {
            None => true,
            Some(other) => augment(other, adj, seen, match_col),
        };
        if free {
            match_col[col] = Some(row);
            return true;
        }
    }
    false
}

/// Kuhn–Munkres with row/column potentials, O(n^3). Returns the column
/// assigned to each row.
fn hungarian(n: usize, cost: &[f64]) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is a sentinel column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut row_of = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// Split a diagram pair into finite points and sorted essential births,
/// checking that the essential classes can be matched.
fn prepare(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
) -> Result<(MatchingProblem, Vec<f64>)> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(a.dim, b.dim));
    }
    let (mut ea, mut eb) = (a.essential_births(), b.essential_births());
    if ea.len() != eb.len() {
        return Err(Error::IncomparableEssentials(ea.len(), eb.len()));
    }
    ea.sort_by(f64::total_cmp);
    eb.sort_by(f64::total_cmp);
    let essential_costs = ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).collect();
    // fixed argument order makes the result exactly symmetric
    let (mut left, mut right) = (a.finite_points(), b.finite_points());
    let key = |pts: &[(f64, f64)]| pts.iter().flat_map(|p| [p.0, p.1]).collect::<Vec<f64>>();
    let (ka, kb) = (key(&left), key(&right));
    let ord = ka.len().cmp(&kb.len()).then_with(|| {
        ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    if ord.is_gt() {
        std::mem::swap(&mut left, &mut right);
    }
    Ok((MatchingProblem::new(left, right), essential_costs))
}

/// `W_p`: p-th root of the minimal total of p-th powers of sup-norm costs.
pub fn wasserstein(a: &PersistenceDiagram, b: &PersistenceDiagram, p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter("Wasserstein degree must be >= 1".into()));
    }
    let (problem, essential) = prepare(a, b)?;
    let total = problem.min_power_cost(p) + essential.iter().map(|c| c.powi(p as i32)).sum::<f64>();
    Ok(total.powf(1.0 / p as f64))
}

/// `W_inf`: the smallest achievable maximum matched cost.
pub fn bottleneck(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<f64> {
    let (problem, essential) = prepare(a, b)?;
    Ok(essential.into_iter().fold(problem.min_bottleneck(), f64::max))
}
