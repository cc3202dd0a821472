//! Choice of the η truncation level.
//!
//! Dropping points above `η*` loses, in expectation, at most
//! `t² ∫_{η*}^∞ μ_1(y) dy` edges. The level is the smallest value on the grid
//! `1 + η = 2^(j/64)` that keeps this below a budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarginalEvaluator;

/// Cap used when the budget cannot be met or the tail integral diverges.
pub const DEFAULT_ETA_CAP: f64 = 1e8;
const GRID_STEPS_PER_DOUBLING: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub eta_max: f64,
    /// Upper bound on the expected number of edges lost to truncation
    /// (infinite when the tail integral diverges).
    pub expected_missed_edges: f64,
    pub budget: f64,
    /// Set when `eta_max` is the hard cap instead of a budget solution.
    pub capped: bool,
    pub note: Option<String>,
}

fn grid_eta(j: u32) -> f64 {
    (j as f64 / GRID_STEPS_PER_DOUBLING).exp2() - 1.0
}

pub fn choose_eta_max(ev: &MarginalEvaluator, t: f64, budget: f64) -> Result<TruncationReport> {
    choose_eta_max_with_cap(ev, t, budget, DEFAULT_ETA_CAP)
}

pub fn choose_eta_max_with_cap(ev: &MarginalEvaluator, t: f64, budget: f64, cap: f64) -> Result<TruncationReport> {
    if !(budget > 0.0) {
        return Err(Error::Domain(format!(
            "missed-edge budget must be positive, got {budget}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive and finite, got {t}")));
    }
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::Domain(format!("eta cap must be positive and finite, got {cap}")));
    }
    let capped = |missed: f64, note: &str| TruncationReport {
        eta_max: cap,
        expected_missed_edges: missed,
        budget,
        capped: true,
        note: Some(note.to_string()),
    };
    let missed_at = |eta: f64| -> Result<f64> { Ok(t * t * ev.mu1_tail_integral(eta)?) };
    let tail_at_cap = match missed_at(cap) {
        Ok(v) => v,
        Err(Error::QuadratureNonconvergence { .. }) => {
            return Ok(capped(
                f64::INFINITY,
                "tail integral of mu1 could not be evaluated; hard cap used",
            ))
        }
        Err(e) => return Err(e),
    };
    if tail_at_cap.is_infinite() {
        return Ok(capped(f64::INFINITY, "tail integral of mu1 diverges; hard cap used"));
    }
    if budget.is_infinite() {
        return Ok(capped(tail_at_cap, "unbounded budget; hard cap used"));
    }
    if tail_at_cap > budget {
        return Ok(capped(tail_at_cap, "budget not reachable below the hard cap"));
    }
    // Smallest grid index meeting the budget; the grid point above the cap is
    // clipped to the cap, which is known to qualify.
    let j_cap = ((1.0 + cap).log2() * GRID_STEPS_PER_DOUBLING).ceil() as u32;
    let eta_of = |j: u32| grid_eta(j).min(cap);
    let (mut lo, mut hi) = (0u32, j_cap);
    if missed_at(eta_of(0))? <= budget {
        hi = 0;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if missed_at(eta_of(mid))? <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let eta_max = eta_of(hi);
    if eta_max <= 0.0 {
        // A zero graph or tiny t: any positive level works.
        return Ok(TruncationReport {
            eta_max: grid_eta(1),
            expected_missed_edges: missed_at(grid_eta(1))?,
            budget,
            capped: false,
            note: None,
        });
    }
    Ok(TruncationReport {
        eta_max,
        expected_missed_edges: missed_at(eta_max)?,
        budget,
        capped: false,
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GraphexSpec;

    fn ev(spec: GraphexSpec) -> MarginalEvaluator {
        MarginalEvaluator::new(spec)
    }

    #[test]
    fn sum_power_shifted_example() {
        let r = choose_eta_max(&ev(GraphexSpec::sum_power_shifted(3.0).unwrap()), 1000.0, 0.1).unwrap();
        assert!(!r.capped);
        // 1 + η* = 5e6 up to one grid step (2^(1/64)).
        let ratio = (1.0 + r.eta_max) / 5e6;
        assert!((1.0..1.011).contains(&ratio), "{ratio}");
        assert!(r.expected_missed_edges <= 0.1);
    }

    #[test]
    fn smaller_budget_needs_larger_level() {
        let e = ev(GraphexSpec::separable_shifted(3.0).unwrap());
        let a = choose_eta_max(&e, 1000.0, 1.0).unwrap().eta_max;
        let b = choose_eta_max(&e, 1000.0, 0.01).unwrap().eta_max;
        assert!(b > a);
    }

    #[test]
    fn infinite_budget_and_divergent_tail_use_cap() {
        let e = ev(GraphexSpec::sum_power_shifted(3.0).unwrap());
        let r = choose_eta_max(&e, 10.0, f64::INFINITY).unwrap();
        assert!(r.capped && r.eta_max == DEFAULT_ETA_CAP);
        let r = choose_eta_max(&ev(GraphexSpec::sum_power_shifted(2.0).unwrap()), 10.0, 0.1).unwrap();
        assert!(r.capped && r.expected_missed_edges.is_infinite());
        assert!(choose_eta_max(&e, 10.0, 0.0).is_err());
    }
}
