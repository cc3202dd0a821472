//! Finite graphex graphs: truncated Poisson points, edge samplers and the
//! planted-pair sampler.

pub mod export;
pub mod planted;
pub mod points;
pub mod sampler;
pub mod truncation;

pub use export::{export_graph, read_graph, GraphMetadata};
pub use planted::{sample_planted_pair, sample_planted_pairs};
pub use points::{sample_points, Point, PointSample};
pub use sampler::{sample_graph_blocked, sample_graph_naive, SparseGraph, Vertex};
pub use truncation::{choose_eta_max, choose_eta_max_with_cap, TruncationReport};

use crate::error::Result;
use crate::model::{GraphexSpec, MarginalEvaluator};
use crate::rng::derive_seed;

/// Points and edges for one graph at horizon `t`, with `eta_max` chosen from
/// the missed-edge budget. Points and edges use streams derived from `seed`.
pub fn simulate(spec: &GraphexSpec, t: f64, missed_edge_budget: f64, seed: u64) -> Result<SparseGraph> {
    let report = choose_eta_max(&MarginalEvaluator::new(spec.clone()), t, missed_edge_budget)?;
    let pts = sample_points(t, report.eta_max, derive_seed(seed, &[1]))?;
    Ok(sample_graph_blocked(spec, &pts, derive_seed(seed, &[2]))?.with_truncation(report))
}
