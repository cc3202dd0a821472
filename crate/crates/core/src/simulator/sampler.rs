//! Edge samplers: `Z_ij ~ Bernoulli(W(η_i, η_j))` independently per pair.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::points::{Point, PointSample};
use super::truncation::TruncationReport;
use crate::error::{Error, Result};
use crate::model::GraphexSpec;
use crate::rng::stream;

/// Point-count guard for the quadratic oracle sampler.
pub const NAIVE_POINT_LIMIT: usize = 50_000;
/// Guard on the number of pairs visited one by one when `W` cannot be
/// bounded on a band pair.
pub const UNBOUNDED_PAIR_LIMIT: f64 = 1e10;
/// Largest expected number of candidate edges the blocked sampler accepts.
pub const CANDIDATE_LIMIT: f64 = 2e9;

const TAG_BLOCK: u64 = 0x0062_6c6f_636b;
const TAG_NAIVE: u64 = 0x006e_6169_7665;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vertex {
    /// Index of the point in its source sample.
    pub id: u64,
    pub theta: f64,
    pub eta: f64,
}

/// A simple undirected graph over the non-isolated points of a sample,
/// stored as sorted compressed adjacency lists.
#[derive(Debug, Clone)]
pub struct SparseGraph {
    pub t: f64,
    pub eta_max: f64,
    pub seed: u64,
    /// Number of points in the source sample, isolated ones included.
    pub point_count: u64,
    pub truncation: Option<TruncationReport>,
    vertices: Vec<Vertex>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl SparseGraph {
    /// Builds a graph from vertices and an edge list over vertex positions.
    /// Duplicate edges are merged; self-loops are rejected.
    pub fn from_edges(vertices: Vec<Vertex>, edges: &[(u32, u32)]) -> Result<Self> {
        let n = vertices.len();
        let mut adj: Vec<(u32, u32)> = Vec::with_capacity(edges.len() * 2);
        for &(i, j) in edges {
            if i == j {
                return Err(Error::Domain(format!("self-loop at vertex {i}")));
            }
            if i as usize >= n || j as usize >= n {
                return Err(Error::Domain(format!("edge ({i}, {j}) out of range for {n} vertices")));
            }
            adj.push((i, j));
            adj.push((j, i));
        }
        adj.par_sort_unstable();
        adj.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(i, _) in &adj {
            offsets[i as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = adj.into_iter().map(|(_, j)| j).collect();
        Ok(Self {
            t: 0.0,
            eta_max: 0.0,
            seed: 0,
            point_count: n as u64,
            truncation: None,
            vertices,
            offsets,
            neighbors,
        })
    }

    fn with_source(mut self, pts: &PointSample) -> Self {
        self.t = pts.t();
        self.eta_max = pts.eta_max();
        self.seed = pts.seed();
        self.point_count = pts.len();
        self
    }

    pub fn with_truncation(mut self, report: TruncationReport) -> Self {
        self.truncation = Some(report);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn eta(&self, i: usize) -> f64 {
        self.vertices[i].eta
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn edge_count(&self) -> u64 {
        self.neighbors.len() as u64 / 2
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.vertex_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| (j as usize) > i)
                .map(move |&j| (i as u32, j))
        })
    }

    /// `Σ_i deg(i)²`, the cost of wedge enumeration.
    pub fn wedge_work(&self) -> f64 {
        (0..self.vertex_count()).map(|i| (self.degree(i) as f64).powi(2)).sum()
    }

    /// Symmetric, loop-free, sorted adjacency.
    pub fn check_invariants(&self) -> Result<()> {
        for i in 0..self.vertex_count() {
            let nb = self.neighbors(i);
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Numeric(format!("adjacency of {i} not strictly sorted")));
            }
            for &j in nb {
                if j as usize == i {
                    return Err(Error::Numeric(format!("self-loop at {i}")));
                }
                if self.neighbors(j as usize).binary_search(&(i as u32)).is_err() {
                    return Err(Error::Numeric(format!("edge ({i}, {j}) not symmetric")));
                }
            }
        }
        Ok(())
    }
}

/// Collapses global point indices to compact vertex positions and builds the graph.
fn assemble(pts: &PointSample, mut edges: Vec<(u64, u64)>, point_at: impl Fn(u64) -> Point) -> Result<SparseGraph> {
    edges.par_sort_unstable();
    let mut ids: Vec<u64> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
    ids.par_sort_unstable();
    ids.dedup();
    if ids.len() > u32::MAX as usize {
        return Err(Error::Capacity {
            what: "non-isolated vertices",
            requested: ids.len() as f64,
            limit: u32::MAX as f64,
        });
    }
    let pos = |g: u64| ids.binary_search(&g).unwrap() as u32;
    let compact: Vec<(u32, u32)> = edges.par_iter().map(|&(i, j)| (pos(i), pos(j))).collect();
    let vertices = ids
        .iter()
        .map(|&id| {
            let p = point_at(id);
            Vertex {
                id,
                theta: p.theta,
                eta: p.eta,
            }
        })
        .collect();
    let g = SparseGraph::from_edges(vertices, &compact)?.with_source(pts);
    debug_assert!(g.check_invariants().is_ok());
    Ok(g)
}

/// Oracle sampler: one Bernoulli draw per unordered pair.
pub fn sample_graph_naive(spec: &GraphexSpec, pts: &PointSample, seed: u64) -> Result<SparseGraph> {
    let n = pts.len() as usize;
    if n > NAIVE_POINT_LIMIT {
        return Err(Error::Capacity {
            what: "naive sampler point count",
            requested: n as f64,
            limit: NAIVE_POINT_LIMIT as f64,
        });
    }
    let points = pts.materialize()?;
    let mut rng = stream(seed, &[TAG_NAIVE]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = spec.w(points[i].eta, points[j].eta);
            if rng.random::<f64>() < p {
                edges.push((i as u64, j as u64));
            }
        }
    }
    assemble(pts, edges, |g| points[g as usize])
}

/// Number of failures before the next success of a Bernoulli(p) sequence.
#[inline]
fn geometric_skip<R: Rng>(rng: &mut R, ln_q: f64) -> u128 {
    if ln_q == f64::NEG_INFINITY {
        return 0;
    }
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let s = (u.ln() / ln_q).floor();
    if s >= 1e38 {
        u128::MAX
    } else {
        s as u128
    }
}

/// Inverse of `pos = j(j−1)/2 + i` for `0 ≤ i < j`.
#[inline]
fn triangular_pair(pos: u128) -> (u64, u64) {
    let mut j = ((1.0 + (1.0 + 8.0 * pos as f64).sqrt()) / 2.0).floor() as u128;
    while j * (j - 1) / 2 > pos {
        j -= 1;
    }
    while (j + 1) * j / 2 <= pos {
        j += 1;
    }
    let i = pos - j * (j - 1) / 2;
    (i as u64, j as u64)
}

/// Thinning sampler over η-band pairs.
///
/// For a band pair `(A, B)` every pair is a candidate with probability
/// `p̄ = W(lo_A, lo_B)`; candidates are located by geometric skipping over
/// the linear pair index and kept with probability `W(η_i, η_j)/p̄`. This
/// yields exactly independent `Bernoulli(W)` edges whenever `W` is
/// nonincreasing; for other custom `W` the bound is `p̄ = 1`.
pub fn sample_graph_blocked(spec: &GraphexSpec, pts: &PointSample, seed: u64) -> Result<SparseGraph> {
    let bands = pts.bands();
    let monotone = spec.is_monotone();
    if !monotone {
        let n = pts.len() as f64;
        let pairs = n * (n - 1.0) / 2.0;
        if pairs > UNBOUNDED_PAIR_LIMIT {
            return Err(Error::Capacity {
                what: "pairs to visit for a non-monotone graphex",
                requested: pairs,
                limit: UNBOUNDED_PAIR_LIMIT,
            });
        }
    }
    let band_pairs: Vec<(usize, usize)> = (0..bands.len())
        .flat_map(|a| (a..bands.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| bands[a].count > 0 && bands[b].count > 0 && (a != b || bands[a].count > 1))
        .collect();
    let bound = |a: usize, b: usize| {
        if monotone {
            spec.w(bands[a].lo, bands[b].lo).min(1.0)
        } else {
            1.0
        }
    };
    let pair_total = |a: usize, b: usize| -> u128 {
        let (na, nb) = (bands[a].count as u128, bands[b].count as u128);
        if a == b {
            na * (na - 1) / 2
        } else {
            na * nb
        }
    };
    let candidates: f64 = band_pairs
        .iter()
        .map(|&(a, b)| pair_total(a, b) as f64 * bound(a, b))
        .sum();
    if candidates > CANDIDATE_LIMIT {
        return Err(Error::Capacity {
            what: "expected candidate edges",
            requested: candidates,
            limit: CANDIDATE_LIMIT,
        });
    }
    let edges: Vec<(u64, u64)> = band_pairs
        .par_iter()
        .map(|&(a, b)| {
            let bb = &bands[b];
            let p_bar = bound(a, b);
            let mut out = Vec::new();
            if p_bar <= 0.0 {
                return out;
            }
            let ln_q = (-p_bar).ln_1p();
            let total = pair_total(a, b);
            let mut rng = stream(seed, &[TAG_BLOCK, a as u64, b as u64]);
            let mut pos: u128 = 0;
            loop {
                let skip = geometric_skip(&mut rng, ln_q);
                pos = match pos.checked_add(skip) {
                    Some(p) if p < total => p,
                    _ => break,
                };
                let (i, j) = if a == b {
                    triangular_pair(pos)
                } else {
                    ((pos / bb.count as u128) as u64, (pos % bb.count as u128) as u64)
                };
                let w = spec.w(pts.eta_in_band(a, i), pts.eta_in_band(b, j));
                if w >= p_bar || rng.random::<f64>() * p_bar < w {
                    let (gi, gj) = (pts.global_index(a, i), pts.global_index(b, j));
                    out.push((gi.min(gj), gi.max(gj)));
                }
                pos += 1;
            }
            out
        })
        .flatten()
        .collect();
    assemble(pts, edges, |g| pts.point(g))
}
