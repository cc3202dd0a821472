//! Common-connection counts ("2-c-degrees") and the tail-index fit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{scaling_b, GraphexSpec};
use crate::numerics::{ols_loglog, LineFit};
use crate::simulator::SparseGraph;

/// Default guard on `Σ deg²`.
pub const DEFAULT_WEDGE_LIMIT: f64 = 1e10;

/// Only pairs with both latent values above `b_t · epsilon` are counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Restriction {
    pub epsilon: f64,
    pub b_t: f64,
}

impl Restriction {
    pub fn threshold(&self) -> f64 {
        self.b_t * self.epsilon
    }
}

/// Number of unordered vertex pairs with exactly `k ≥ 1` common neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CDegreeHistogram {
    pub counts: BTreeMap<u64, u64>,
    pub pairs_positive: u64,
    pub restriction: Option<Restriction>,
    pub t: f64,
}

impl CDegreeHistogram {
    pub fn get(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// `k,count` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,count\n");
        for (k, c) in &self.counts {
            s.push_str(&format!("{k},{c}\n"));
        }
        s
    }
}

pub fn count_common(graph: &SparseGraph, restriction: Option<Restriction>) -> Result<CDegreeHistogram> {
    count_common_with_limit(graph, restriction, DEFAULT_WEDGE_LIMIT)
}

/// Counts `|N(i) ∩ N(j)|` for all pairs `i < j` that share a neighbour.
///
/// Each source `i` walks its two-hop neighbourhood into a dense counter, so
/// the work is `Σ_z deg(z)²` and memory stays `O(n)` per worker thread.
pub fn count_common_with_limit(
    graph: &SparseGraph,
    restriction: Option<Restriction>,
    wedge_limit: f64,
) -> Result<CDegreeHistogram> {
    let work = graph.wedge_work();
    if work > wedge_limit {
        return Err(Error::Capacity {
            what: "wedge enumeration work (sum of squared degrees)",
            requested: work,
            limit: wedge_limit,
        });
    }
    if let Some(r) = restriction {
        if !(r.epsilon > 0.0) || !(r.b_t >= 0.0) {
            return Err(Error::Domain(format!(
                "restriction needs epsilon > 0 and b_t >= 0, got {r:?}"
            )));
        }
    }
    let n = graph.vertex_count();
    let threshold = restriction.map_or(f64::NEG_INFINITY, |r| r.threshold());
    let eligible = |i: usize| graph.eta(i) > threshold;

    let dense: Vec<u64> = (0..n)
        .into_par_iter()
        .with_min_len(64)
        .fold(
            || (vec![0u32; n], Vec::<u32>::new(), Vec::<u64>::new()),
            |(mut counter, mut touched, mut hist), i| {
                if !eligible(i) {
                    return (counter, touched, hist);
                }
                for &z in graph.neighbors(i) {
                    for &j in graph.neighbors(z as usize) {
                        if j as usize > i && eligible(j as usize) {
                            if counter[j as usize] == 0 {
                                touched.push(j);
                            }
                            counter[j as usize] += 1;
                        }
                    }
                }
                for &j in &touched {
                    let k = counter[j as usize] as usize;
                    if hist.len() <= k {
                        hist.resize(k + 1, 0);
                    }
                    hist[k] += 1;
                    counter[j as usize] = 0;
                }
                touched.clear();
                (counter, touched, hist)
            },
        )
        .map(|(_, _, hist)| hist)
        .reduce(Vec::new, |mut a, b| {
            if a.len() < b.len() {
                a.resize(b.len(), 0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        });
    let counts: BTreeMap<u64, u64> = dense
        .into_iter()
        .enumerate()
        .filter(|&(k, c)| k >= 1 && c > 0)
        .map(|(k, c)| (k as u64, c))
        .collect();
    Ok(CDegreeHistogram {
        pairs_positive: counts.values().sum(),
        counts,
        restriction,
        t: graph.t,
    })
}

/// Histogram restricted to latent values above `b(t) · epsilon`.
pub fn restricted_histogram(graph: &SparseGraph, spec: &GraphexSpec, epsilon: f64) -> Result<CDegreeHistogram> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let b_t = scaling_b(spec, graph.t)?;
    count_common(graph, Some(Restriction { epsilon, b_t }))
}

/// `N_t^ε(k)`: unordered pairs above `b(t) ε` with exactly `k` common neighbours.
pub fn n_t_epsilon(graph: &SparseGraph, spec: &GraphexSpec, epsilon: f64, k: u64) -> Result<u64> {
    Ok(restricted_histogram(graph, spec, epsilon)?.get(k))
}

/// `(k, P(C = k | C > 0))` over the support, sorted by `k`.
pub fn empirical_distribution(hist: &CDegreeHistogram) -> Result<Vec<(u64, f64)>> {
    if hist.pairs_positive == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = hist.pairs_positive as f64;
    Ok(hist.counts.iter().map(|(&k, &c)| (k, c as f64 / total)).collect())
}

pub fn distribution_csv(dist: &[(u64, f64)]) -> String {
    let mut s = String::from("k,prob\n");
    for (k, p) in dist {
        s.push_str(&format!("{k},{p:e}\n"));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub r2_target: f64,
    pub min_points: usize,
    /// Average probabilities over dyadic bins of `k` before fitting.
    pub log_binning: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            r2_target: 0.995,
            min_points: 5,
            log_binning: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    #[serde(rename = "r2")]
    pub r_squared: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub n_points: usize,
}

impl TailFit {
    pub fn index_estimate(&self) -> f64 {
        self.slope.abs()
    }
}

/// Dyadic bins `[2^m, 2^(m+1))`: mean probability per integer `k` in the bin,
/// placed at the geometric centre.
fn log_bin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut bins: BTreeMap<i32, f64> = BTreeMap::new();
    for &(k, p) in points {
        *bins.entry(k.log2().floor() as i32).or_default() += p;
    }
    bins.into_iter()
        .map(|(m, mass)| {
            let lo = 2f64.powi(m);
            (lo * std::f64::consts::SQRT_2, mass / lo)
        })
        .collect()
}

/// Log-log OLS with cutoff trimming: the largest `k` is dropped while
/// `R² < r2_target`; fails once fewer than `min_points` would remain.
pub fn fit_tail_index(dist: &[(u64, f64)], opts: FitOptions) -> Result<TailFit> {
    let min_points = opts.min_points.max(2);
    let mut points: Vec<(f64, f64)> = dist
        .iter()
        .filter(|&&(k, p)| k >= 1 && p > 0.0)
        .map(|&(k, p)| (k as f64, p))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if opts.log_binning {
        points = log_bin(&points);
    }
    let mut best_r2 = f64::NAN;
    while points.len() >= min_points {
        let LineFit {
            slope,
            intercept,
            r_squared,
        } = ols_loglog(&points)?;
        if r_squared >= opts.r2_target {
            return Ok(TailFit {
                slope,
                intercept,
                r_squared,
                k_min: points[0].0,
                k_max: points[points.len() - 1].0,
                n_points: points.len(),
            });
        }
        best_r2 = if best_r2.is_nan() {
            r_squared
        } else {
            best_r2.max(r_squared)
        };
        points.pop();
    }
    Err(Error::FitFailure { min_points, best_r2 })
}
