//! Reference oracles for the test suites.
//!
//! Everything here is deliberately naive and shares no code with the
//! `tdaindex` crate: distances, simplices, ranks and matchings are all
//! recomputed from scratch so that agreement with the optimized code paths
//! means something.

/// One persistence interval produced by an oracle. `death` is `f64::INFINITY`
/// for essential classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Rank of a set of GF(2) vectors stored as bitmasks.
fn rank(vectors: impl IntoIterator<Item = u128>) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for mut v in vectors {
        for b in &basis {
            let top = 127 - b.leading_zeros();
            if v >> top & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            // keep basis sorted by leading bit, descending
            basis.push(v);
            basis.sort_by(|a, b| b.leading_zeros().cmp(&a.leading_zeros()).reverse());
        }
    }
    basis.len()
}

/// Full Rips complex up to triangles, built by enumeration.
struct Complex {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    triangles: Vec<(usize, usize, usize, f64)>,
}

impl Complex {
    fn new(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        assert!(n <= 16, "oracle supports at most 16 points");
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, euclid(&points[i], &points[j])));
            }
        }
        let dist = |a: usize, b: usize| euclid(&points[a], &points[b]);
        let mut triangles = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let v = dist(i, j).max(dist(i, k)).max(dist(j, k));
                    triangles.push((i, j, k, v));
                }
            }
        }
        Complex { n, edges, triangles }
    }

    fn edge_pos(&self, a: usize, b: usize) -> usize {
        self.edges
            .iter()
            .position(|&(i, j, _)| (i, j) == (a.min(b), a.max(b)))
            .unwrap()
    }

    fn critical_values(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = std::iter::once(0.0)
            .chain(self.edges.iter().map(|e| e.2))
            .collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }

    /// Basis of the cycle space Z_k at scale `a`, for k in {0, 1}.
    fn cycles(&self, k: usize, a: f64) -> Vec<u128> {
        if k == 0 {
            return (0..self.n).map(|v| 1u128 << v).collect();
        }
        // kernel of the edge boundary map, via elimination with history
        let mut reduced: Vec<(u128, u128)> = Vec::new();
        let mut kernel = Vec::new();
        for (pos, &(i, j, v)) in self.edges.iter().enumerate() {
            if v > a {
                continue;
            }
            let mut bd: u128 = (1 << i) | (1 << j);
            let mut combo: u128 = 1 << pos;
            loop {
                if bd == 0 {
                    kernel.push(combo);
                    break;
                }
                let top = 127 - bd.leading_zeros();
                match reduced.iter().find(|(b, _)| 127 - b.leading_zeros() == top) {
                    Some(&(b, c)) => {
                        bd ^= b;
                        combo ^= c;
                    }
                    None => {
                        reduced.push((bd, combo));
                        break;
                    }
                }
            }
        }
        kernel
    }

    /// Spanning set of the boundary space B_k at scale `b`, for k in {0, 1}.
    fn boundaries(&self, k: usize, b: f64) -> Vec<u128> {
        if k == 0 {
            self.edges
                .iter()
                .filter(|e| e.2 <= b)
                .map(|&(i, j, _)| (1u128 << i) | (1u128 << j))
                .collect()
        } else {
            self.triangles
                .iter()
                .filter(|t| t.3 <= b)
                .map(|&(i, j, l, _)| {
                    (1u128 << self.edge_pos(i, j))
                        | (1u128 << self.edge_pos(i, l))
                        | (1u128 << self.edge_pos(j, l))
                })
                .collect()
        }
    }

    /// Rank of the map H_k(K_a) -> H_k(K_b), a <= b.
    fn persistent_betti(&self, k: usize, a: f64, b: f64) -> usize {
        let z = self.cycles(k, a);
        let bd = self.boundaries(k, b);
        let sum_rank = rank(z.iter().copied().chain(bd.iter().copied()));
        sum_rank - rank(bd)
    }
}

/// Persistence bars of the Rips filtration of `points` in dimensions 0 and 1,
/// derived purely from ranks of persistent homology maps by
/// inclusion–exclusion. Zero-length bars are invisible to this construction.
pub fn rips_bars(points: &[Vec<f64>]) -> Vec<Bar> {
    let cx = Complex::new(points);
    let vals = cx.critical_values();
    let m = vals.len();
    let mut bars = Vec::new();
    for k in 0..=1 {
        let beta = |i: isize, j: usize| -> isize {
            if i < 0 {
                0
            } else {
                cx.persistent_betti(k, vals[i as usize], vals[j]) as isize
            }
        };
        for i in 0..m {
            let ii = i as isize;
            for j in i + 1..m {
                let mult = beta(ii, j - 1) - beta(ii - 1, j - 1) - beta(ii, j) + beta(ii - 1, j);
                assert!(mult >= 0, "negative multiplicity in oracle");
                for _ in 0..mult {
                    bars.push(Bar { dim: k, birth: vals[i], death: vals[j] });
                }
            }
            let ess = beta(ii, m - 1) - beta(ii - 1, m - 1);
            for _ in 0..ess {
                bars.push(Bar { dim: k, birth: vals[i], death: f64::INFINITY });
            }
        }
    }
    bars
}

/// Betti numbers (b0, b1) of the Rips complex at scale `eps`.
pub fn betti_at(points: &[Vec<f64>], eps: f64) -> (usize, usize) {
    let cx = Complex::new(points);
    (cx.persistent_betti(0, eps, eps), cx.persistent_betti(1, eps, eps))
}

fn sup_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn to_diag(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Optimal matching cost between two finite diagrams by exhaustive search
/// over every partial injection of `left` into `right`; unmatched points on
/// either side go to the diagonal. `p = None` gives the bottleneck distance.
pub fn matching_distance(left: &[(f64, f64)], right: &[(f64, f64)], p: Option<u32>) -> f64 {
    let mut best = f64::INFINITY;
    let mut used = vec![false; right.len()];
    let mut chosen: Vec<Option<usize>> = Vec::with_capacity(left.len());
    search(left, right, p, &mut used, &mut chosen, &mut best);
    match p {
        Some(p) => best.powf(1.0 / p as f64),
        None => best,
    }
}

fn search(
    left: &[(f64, f64)],
    right: &[(f64, f64)],
    p: Option<u32>,
    used: &mut Vec<bool>,
    chosen: &mut Vec<Option<usize>>,
    best: &mut f64,
) {
    if chosen.len() == left.len() {
        let mut costs: Vec<f64> = Vec::new();
        for (i, c) in chosen.iter().enumerate() {
            costs.push(match c {
                Some(j) => sup_dist(left[i], right[*j]),
                None => to_diag(left[i]),
            });
        }
        for (j, u) in used.iter().enumerate() {
            if !u {
                costs.push(to_diag(right[j]));
            }
        }
        let total = match p {
            Some(p) => costs.iter().map(|c| c.powi(p as i32)).sum::<f64>(),
            None => costs.iter().copied().fold(0.0, f64::max),
        };
        if total < *best {
            *best = total;
        }
        return;
    }
    chosen.push(None);
    search(left, right, p, used, chosen, best);
    chosen.pop();
    for j in 0..right.len() {
        if !used[j] {
            used[j] = true;
            chosen.push(Some(j));
            search(left, right, p, used, chosen, best);
            chosen.pop();
            used[j] = false;
        }
    }
}

/// k-th largest tent value at `x` (1-based `k`), directly from the definition.
pub fn landscape_value(pairs: &[(f64, f64)], k: usize, x: f64) -> f64 {
    let mut vals: Vec<f64> = pairs
        .iter()
        .map(|&(b, d)| {
            if x <= b || x >= d {
                0.0
            } else if x <= (b + d) / 2.0 {
                x - b
            } else {
                d - x
            }
        })
        .collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals.get(k - 1).copied().unwrap_or(0.0)
}

/// Composite midpoint rule for the integral of `f` over `[a, b]`.
pub fn midpoint_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    (0..steps).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_bars() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let bars = rips_bars(&pts);
        let h1: Vec<_> = bars.iter().filter(|b| b.dim == 1).collect();
        assert_eq!(h1.len(), 1);
        assert_eq!(h1[0].birth, 1.0);
        assert_eq!(h1[0].death, 2f64.sqrt());
        let h0: Vec<_> = bars.iter().filter(|b| b.dim == 0).collect();
        assert_eq!(h0.len(), 4);
        assert_eq!(h0.iter().filter(|b| b.death.is_infinite()).count(), 1);
    }

    #[test]
    fn matching_examples() {
        assert_eq!(matching_distance(&[(0.0, 2.0)], &[], Some(1)), 1.0);
        assert_eq!(matching_distance(&[(0.0, 2.0)], &[(0.0, 4.0)], Some(1)), 2.0);
        assert!((matching_distance(&[(0.0, 2.0)], &[(0.0, 2.1)], None) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn betti_square() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        assert_eq!(betti_at(&pts, 1.2), (1, 1));
        assert_eq!(betti_at(&pts, 1.5), (1, 0));
        assert_eq!(betti_at(&pts, 0.0), (4, 0));
    }
}
