//! Persistence diagrams by boundary-matrix reduction over the two-element
//! field.
//!
//! Columns are reduced from the highest requested dimension downwards with
//! clearing: once a (k+1)-simplex is paired with a k-simplex, the k-simplex
//! column is known to reduce to zero and is skipped. Zero-dimensional classes
//! can alternatively be tracked with a union-find over the edges, which also
//! lets us drop negative edges from triangle boundaries before reducing them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::filtration::{Filtration, Vertices};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub multiplicity: u32,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

/// Multiset of (birth, death) points in one homology dimension, sorted by
/// (birth, death) with equal points merged into a multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub dim: usize,
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn empty(dim: usize) -> Self {
        PersistenceDiagram { dim, pairs: Vec::new() }
    }

    /// Builds a diagram from raw (birth, death) points, merging duplicates.
    pub fn from_points(dim: usize, points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut pairs: Vec<PersistencePair> = Vec::new();
        for (birth, death) in pts {
            match pairs.last_mut() {
                Some(last) if last.birth == birth && last.death == death => last.multiplicity += 1,
                _ => pairs.push(PersistencePair { birth, death, multiplicity: 1 }),
            }
        }
        PersistenceDiagram { dim, pairs }
    }

    /// Total number of points counted with multiplicity.
    pub fn size(&self) -> usize {
        self.pairs.iter().map(|p| p.multiplicity as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Points expanded by multiplicity.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pairs
            .iter()
            .flat_map(|p| std::iter::repeat_n((p.birth, p.death), p.multiplicity as usize))
    }

    pub fn finite_points(&self) -> Vec<(f64, f64)> {
        self.points().filter(|p| p.1.is_finite()).collect()
    }

    pub fn essential_births(&self) -> Vec<f64> {
        self.points().filter(|p| p.1.is_infinite()).map(|p| p.0).collect()
    }

    /// Number of classes alive at `eps`, i.e. with `birth <= eps < death`.
    pub fn betti_at(&self, eps: f64) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.birth <= eps && eps < p.death)
            .map(|p| p.multiplicity as usize)
            .sum()
    }

    /// Writes CSV rows `dim,birth,death,multiplicity` (no header).
    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> io::Result<()> {
        for p in &self.pairs {
            writeln!(out, "{},{},{},{}", self.dim, p.birth, p.death, p.multiplicity)?;
        }
        Ok(())
    }
}

/// Writes diagrams as CSV with header `dim,birth,death,multiplicity`;
/// infinite deaths are written as `inf`.
pub fn write_diagrams_csv<W: Write>(
    diagrams: &BTreeMap<usize, PersistenceDiagram>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "dim,birth,death,multiplicity")?;
    for d in diagrams.values() {
        d.write_csv_rows(&mut out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PersistenceOptions {
    /// Keep pairs with birth == death.
    pub keep_zero_persistence: bool,
    /// Track dimension-0 classes with a union-find instead of reducing edge
    /// columns.
    pub h0_union_find: bool,
    /// Pair edges with triangles by reducing coboundary columns instead of
    /// triangle boundaries. Needs `h0_union_find`.
    pub h1_cohomology: bool,
}

impl Default for PersistenceOptions {
    fn default() -> Self {
        PersistenceOptions { keep_zero_persistence: false, h0_union_find: true, h1_cohomology: true }
    }
}

/// Boundary matrix over the two-element field. Column `j` lists the
/// filtration indices of the codimension-one faces of simplex `j`, sorted
/// ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub columns: Vec<Vec<u32>>,
    pub dims: Vec<usize>,
}

impl BoundaryMatrix {
    pub fn from_filtration(f: &Filtration) -> Self {
        let lookup = FaceLookup::new(f);
        let mut columns = Vec::with_capacity(f.len());
        let mut dims = Vec::with_capacity(f.len());
        for s in &f.simplices {
            columns.push(lookup.boundary(&s.vertices));
            dims.push(s.dim());
        }
        BoundaryMatrix { columns, dims }
    }
}

/// Maps vertex lists back to filtration indices.
struct FaceLookup {
    n: usize,
    vertex: Vec<u32>,
    edge: Vec<u32>,
    higher: HashMap<Vertices, u32>,
}

impl FaceLookup {
    fn new(f: &Filtration) -> Self {
        let n = f.vertex_count;
        let mut vertex = vec![u32::MAX; n];
        let mut edge = vec![u32::MAX; n * n];
        let mut higher = HashMap::new();
        for (idx, s) in f.simplices.iter().enumerate() {
            let v = &s.vertices;
            match v.len() {
                1 => vertex[v[0] as usize] = idx as u32,
                2 => edge[v[0] as usize * n + v[1] as usize] = idx as u32,
                // only (dim >= 2) simplices can be faces of dim >= 3 ones
                _ if v.len() < f.max_dim + 1 => {
                    higher.insert(v.clone(), idx as u32);
                }
                _ => {}
            }
        }
        FaceLookup { n, vertex, edge, higher }
    }

    fn index_of(&self, face: &[u32]) -> u32 {
        match face.len() {
            1 => self.vertex[face[0] as usize],
            2 => self.edge[face[0] as usize * self.n + face[1] as usize],
            _ => self.higher[face],
        }
    }

    fn boundary(&self, vertices: &[u32]) -> Vec<u32> {
        let edge = |a: u32, b: u32| self.edge[a as usize * self.n + b as usize];
        let mut col: Vec<u32> = match *vertices {
            [_] => return Vec::new(),
            [a, b] => vec![self.vertex[a as usize], self.vertex[b as usize]],
            [a, b, c] => vec![edge(a, b), edge(a, c), edge(b, c)],
            _ => self.higher_boundary(vertices),
        };
        col.sort_unstable();
        col
    }

    fn higher_boundary(&self, vertices: &[u32]) -> Vec<u32> {
        (0..vertices.len())
            .map(|skip| {
                let face: Vertices = vertices
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, v)| *v)
                    .collect();
                self.index_of(&face)
            })
            .collect()
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    /// Merges the two classes; the root with the larger index (the younger
    /// one, since vertices are ordered by index) is absorbed and returned.
    fn union(&mut self, a: u32, b: u32) -> Option<u32> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (elder, younger) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[younger as usize] = elder;
        Some(younger)
    }
}

/// `target ^= source` for sorted index lists.
fn add_column(target: &mut Vec<u32>, source: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < source.len() {
        match target[i].cmp(&source[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(source[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&target[i..]);
    scratch.extend_from_slice(&source[j..]);
    std::mem::swap(target, scratch);
}

/// Result of reducing the boundary matrix: `low[j]` is the pivot row of
/// column `j` after reduction, when it has one.
struct Pairing {
    low: Vec<Option<u32>>,
    /// `negative[i]` is true when simplex `i` destroys a class.
    negative: Vec<bool>,
    /// `killer[i]` is the column whose pivot is `i`.
    killer: Vec<Option<u32>>,
}

fn reduce(f: &Filtration, dims: &BTreeSet<usize>, union_find: bool, cohomology: bool) -> Pairing {
    let n = f.len();
    let lookup = FaceLookup::new(f);
    let mut low: Vec<Option<u32>> = vec![None; n];
    let mut negative = vec![false; n];
    let mut killer: Vec<Option<u32>> = vec![None; n];

    // columns of these dimensions must be reduced
    let mut todo: BTreeSet<usize> = BTreeSet::new();
    for &k in dims {
        if k + 1 <= f.max_dim {
            todo.insert(k + 1);
        }
        if k >= 1 {
            todo.insert(k);
        }
    }
    let use_uf = union_find && todo.contains(&1);
    if use_uf {
        let mut uf = UnionFind::new(f.vertex_count);
        for (j, s) in f.simplices.iter().enumerate() {
            if s.dim() == 1 {
                if let Some(dying) = uf.union(s.vertices[0], s.vertices[1]) {
                    let row = lookup.vertex[dying as usize];
                    low[j] = Some(row);
                    killer[row as usize] = Some(j as u32);
                    negative[j] = true;
                }
            }
        }
        todo.remove(&1);
    }

    if use_uf && cohomology && f.max_dim >= 2 && todo.iter().eq([2].iter()) {
        pair_edges_by_cohomology(f, &mut low, &mut negative, &mut killer);
        todo.remove(&2);
    }

    let mut cleared = vec![false; n];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut scratch = Vec::new();
    for &dim in todo.iter().rev() {
        for (j, s) in f.simplices.iter().enumerate() {
            if s.dim() != dim || cleared[j] {
                continue;
            }
            let mut col = lookup.boundary(&s.vertices);
            if dim == 2 && use_uf {
                // negative edges never become pivots of triangle columns
                col.retain(|&r| !negative[r as usize]);
            }
            while let Some(&pivot) = col.last() {
                match killer[pivot as usize] {
                    Some(other) => add_column(&mut col, &reduced[other as usize], &mut scratch),
                    None => break,
                }
            }
            if let Some(&pivot) = col.last() {
                low[j] = Some(pivot);
                killer[pivot as usize] = Some(j as u32);
                negative[j] = true;
                cleared[pivot as usize] = true;
                reduced[j] = col;
            }
        }
    }
    Pairing { low, negative, killer }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Pairs positive edges with the triangles that kill them by reducing
/// coboundary columns in reverse filtration order. The resulting pairs are
/// the ones the boundary reduction would produce, but only the positive
/// edges need columns, which for Rips complexes is far less work than
/// reducing every triangle. Edges already known to be negative (from the
/// union-find) are cleared.
fn pair_edges_by_cohomology(
    f: &Filtration,
    low: &mut [Option<u32>],
    negative: &mut [bool],
    killer: &mut [Option<u32>],
) {
    let n = f.vertex_count;
    let choose2: Vec<usize> = (0..n).map(|k| binomial(k, 2)).collect();
    let choose3: Vec<usize> = (0..n).map(|k| binomial(k, 3)).collect();
    let tri_key = |mut t: [u32; 3]| {
        t.sort_unstable();
        choose3[t[2] as usize] + choose2[t[1] as usize] + t[0] as usize
    };
    let mut triangle_at = vec![u32::MAX; binomial(n, 3)];
    for (i, s) in f.simplices.iter().enumerate() {
        if let [a, b, c] = *s.vertices.as_slice() {
            triangle_at[tri_key([a, b, c])] = i as u32;
        }
    }

    let mut owner: Vec<Option<u32>> = vec![None; f.len()];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); f.len()];
    let mut scratch = Vec::new();
    for (e, s) in f.simplices.iter().enumerate().rev() {
        if s.dim() != 1 || negative[e] {
            continue;
        }
        let (a, b) = (s.vertices[0], s.vertices[1]);
        let mut col: Vec<u32> = (0..n as u32)
            .filter(|&v| v != a && v != b)
            .map(|v| triangle_at[tri_key([a, b, v])])
            .filter(|&t| t != u32::MAX)
            .collect();
        col.sort_unstable();
        while let Some(&pivot) = col.first() {
            match owner[pivot as usize] {
                Some(other) => add_column(&mut col, &reduced[other as usize], &mut scratch),
                None => break,
            }
        }
        if let Some(&tri) = col.first() {
            owner[tri as usize] = Some(e as u32);
            killer[e] = Some(tri);
            low[tri as usize] = Some(e as u32);
            negative[tri as usize] = true;
            reduced[e] = col;
        }
    }
}

fn check_expansion(f: &Filtration, dims: &BTreeSet<usize>) -> Result<()> {
    for &k in dims {
        if f.max_dim < k + 1 && !f.is_complete() {
            return Err(Error::InsufficientExpansion { dim: k, have: f.max_dim, need: k + 1 });
        }
    }
    Ok(())
}

/// Persistence diagrams for each requested dimension, with default options.
pub fn compute_persistence(
    f: &Filtration,
    dims: &[usize],
) -> Result<BTreeMap<usize, PersistenceDiagram>> {
    compute_persistence_with(f, dims, PersistenceOptions::default())
}

pub fn compute_persistence_with(
    f: &Filtration,
    dims: &[usize],
    opts: PersistenceOptions,
) -> Result<BTreeMap<usize, PersistenceDiagram>> {
    let dims: BTreeSet<usize> = dims.iter().copied().collect();
    check_expansion(f, &dims)?;
    let pairing = reduce(f, &dims, opts.h0_union_find, opts.h1_cohomology);
    let mut out = BTreeMap::new();
    for &k in &dims {
        let mut points = Vec::new();
        for (i, s) in f.simplices.iter().enumerate() {
            if s.dim() != k || pairing.negative[i] {
                continue;
            }
            let death = match pairing.killer[i] {
                Some(j) => f.simplices[j as usize].value,
                None => f64::INFINITY,
            };
            if death == s.value && !opts.keep_zero_persistence {
                continue;
            }
            points.push((s.value, death));
        }
        debug_assert!(pairing
            .low
            .iter()
            .flatten()
            .all(|&r| pairing.killer[r as usize].is_some()));
        out.insert(k, PersistenceDiagram::from_points(k, points));
    }
    Ok(out)
}

/// Rank of the k-th homology of the complex at scale `eps`.
pub fn betti_at(f: &Filtration, eps: f64, k: usize) -> Result<usize> {
    let diagrams = compute_persistence(f, &[k])?;
    Ok(diagrams[&k].betti_at(eps))
}
