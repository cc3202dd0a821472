//! Tail-index bounds, the limit of the restricted common-connection counts,
//! the finite-`t` expected counts, and the `μ_4` moment-condition probe.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::{LimitFunctions, MarginalEvaluator};
use crate::numerics::{integrate_2d, QuadratureResult, Tolerance};
use crate::rng::{mix64, open_unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    SeparableTwoSided,
    NonSeparableUpperRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub kind: BoundKind,
    pub alpha: f64,
}

/// Decimal places at which estimates are scored against a bound.
pub const COVERAGE_DECIMALS: i32 = 3;

fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s
}

impl BoundInterval {
    /// Closed-interval membership after rounding everything to
    /// [`COVERAGE_DECIMALS`] places.
    pub fn covers(&self, x: f64) -> bool {
        let r = round_to(x, COVERAGE_DECIMALS);
        r >= round_to(self.lower, COVERAGE_DECIMALS) && r <= round_to(self.upper, COVERAGE_DECIMALS)
    }

    pub fn covers_upper(&self, x: f64) -> bool {
        round_to(x, COVERAGE_DECIMALS) <= round_to(self.upper, COVERAGE_DECIMALS)
    }
}

/// Range of the common-connection tail index.
///
/// Separable: `[1 + 1/α, max(3/2 + 1/α, 1 + 2/α)]` for `α > 1`.
/// Non-separable: `(1 + 2/(2α − 1), 1 + 4/α)` for `α > 2`.
pub fn bound_interval(alpha: f64, separable: bool) -> Result<BoundInterval> {
    if separable {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("separable bound needs alpha > 1, got {alpha}")));
        }
        Ok(BoundInterval {
            lower: 1.0 + 1.0 / alpha,
            upper: (1.5 + 1.0 / alpha).max(1.0 + 2.0 / alpha),
            kind: BoundKind::SeparableTwoSided,
            alpha,
        })
    } else {
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "non-separable bound needs alpha > 2, got {alpha}"
            )));
        }
        Ok(BoundInterval {
            lower: 1.0 + 2.0 / (2.0 * alpha - 1.0),
            upper: 1.0 + 4.0 / alpha,
            kind: BoundKind::NonSeparableUpperRange,
            alpha,
        })
    }
}

/// A quadrature value with the error the integrator believes it achieved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    pub value: f64,
    pub tolerance_achieved: f64,
}

/// Relative tolerance of the double integrals below.
pub const DOUBLE_INTEGRAL_TOLERANCE: f64 = 1e-6;

#[inline]
fn poisson_pmf_f(k: u64, rate: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    (k as f64 * rate.ln() - rate - ln_factorial(k)).exp()
}

fn finish(r: QuadratureResult, failed: bool) -> Result<IntegralValue> {
    if failed {
        return Err(Error::Numeric("inner integral failed inside a double integral".into()));
    }
    if !r.converged {
        return Err(Error::QuadratureNonconvergence {
            estimate: r.value,
            error_estimate: r.error_estimate,
        });
    }
    Ok(IntegralValue {
        value: r.value,
        tolerance_achieved: if r.value != 0.0 {
            r.error_estimate / r.value.abs()
        } else {
            r.error_estimate
        },
    })
}

fn check_eps_k(epsilon: f64, k: u64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    Ok(())
}

/// `(1/k!) ∬_{[ε,∞)²} λ(u,v)^k e^{−λ(u,v)} du dv`.
pub fn limit_nk(lf: &LimitFunctions, epsilon: f64, k: u64) -> Result<IntegralValue> {
    check_eps_k(epsilon, k)?;
    let failed = std::sync::atomic::AtomicBool::new(false);
    let r = integrate_2d(
        |u, v| match lf.lambda(u, v) {
            Ok(l) => poisson_pmf_f(k, l),
            Err(_) => {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                0.0
            }
        },
        (epsilon, epsilon),
        Tolerance::relative(DOUBLE_INTEGRAL_TOLERANCE),
    );
    finish(r, failed.into_inner())
}

/// `t² ∬_{(b_t ε, ∞)²} P(Poisson(t μ_2(x,y)) = k) dx dy`: the expected number
/// of ordered pairs above `b_t ε` with exactly `k` common neighbours.
pub fn expected_nk_finite_t(ev: &MarginalEvaluator, t: f64, epsilon: f64, k: u64, b_t: f64) -> Result<IntegralValue> {
    check_eps_k(epsilon, k)?;
    if !(t > 0.0 && t.is_finite()) || !(b_t > 0.0 && b_t.is_finite()) {
        return Err(Error::Domain(format!("need t, b_t > 0, got ({t}, {b_t})")));
    }
    let failed = std::sync::atomic::AtomicBool::new(false);
    let lo = b_t * epsilon;
    // Integrate in units of b_t so the integrand has unit scale.
    let r = integrate_2d(
        |u, v| match ev.mu2(b_t * u, b_t * v) {
            Ok(m) => poisson_pmf_f(k, t * m),
            Err(_) => {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                0.0
            }
        },
        (lo / b_t, lo / b_t),
        Tolerance::relative(DOUBLE_INTEGRAL_TOLERANCE),
    );
    let v = finish(r, failed.into_inner())?;
    Ok(IntegralValue {
        value: v.value * (t * b_t).powi(2),
        tolerance_achieved: v.tolerance_achieved,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mu4Scan {
    pub sup_ratio: f64,
    pub argmax: [f64; 4],
    pub q: f64,
    pub n_probes: usize,
    pub probe_box: (f64, f64),
}

/// Default probe box for [`mu4_condition_scan`].
pub const MU4_PROBE_BOX: (f64, f64) = (0.01, 100.0);

/// Largest observed `μ_4(x_1..x_4) / (μ_2(x_1,x_2) μ_2(x_3,x_4))^q` over
/// log-uniform quadruples in `probe_box`; a lower bound on the constant of
/// the moment condition, not a proof that it holds.
pub fn mu4_condition_scan(
    ev: &MarginalEvaluator,
    q: f64,
    n_probes: usize,
    probe_box: (f64, f64),
    seed: u64,
) -> Result<Mu4Scan> {
    if !(q > 0.5 && q.is_finite()) {
        return Err(Error::Domain(format!("q must exceed 1/2, got {q}")));
    }
    let (lo, hi) = probe_box;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n_probes == 0 {
        return Err(Error::Domain(format!(
            "invalid probe box {probe_box:?} or probe count {n_probes}"
        )));
    }
    let (ln_lo, ln_span) = (lo.ln(), (hi / lo).ln());
    let best = (0..n_probes)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize, [f64; 4])> {
            let base = mix64(seed, i as u64);
            let x: [f64; 4] = std::array::from_fn(|c| (ln_lo + ln_span * open_unit(mix64(base, c as u64))).exp());
            let ratio = mu4_ratio(ev, x, q)?;
            Ok((ratio, i, x))
        })
        .try_reduce_with(|a, b| {
            // Ties go to the lower probe index, so the result is schedule-independent.
            Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        })
        .unwrap()?;
    Ok(Mu4Scan {
        sup_ratio: best.0,
        argmax: best.2,
        q,
        n_probes,
        probe_box,
    })
}

pub fn mu4_ratio(ev: &MarginalEvaluator, x: [f64; 4], q: f64) -> Result<f64> {
    let m4 = ev.mu_d(&x)?;
    let d = ev.mu2(x[0], x[1])? * ev.mu2(x[2], x[3])?;
    Ok(m4 / d.powf(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{limit_omega, GraphexSpec};

    #[test]
    fn bound_examples() {
        let b = bound_interval(2.0, true).unwrap();
        assert_eq!((b.lower, b.upper), (1.5, 2.0));
        let b = bound_interval(1.5, true).unwrap();
        assert!((b.lower - 5.0 / 3.0).abs() < 1e-12 && (b.upper - 7.0 / 3.0).abs() < 1e-12);
        let b = bound_interval(3.0, false).unwrap();
        assert!((b.lower - 1.4).abs() < 1e-12 && (b.upper - 7.0 / 3.0).abs() < 1e-12);
        assert!(bound_interval(1.0, true).is_err());
        assert!(bound_interval(2.0, false).is_err());
    }

    #[test]
    fn hand_evaluated_bounds() {
        for a in [1.5f64, 2.0, 3.0, 4.0, 5.0] {
            let b = bound_interval(a, true).unwrap();
            let upper = if a < 2.0 { 1.0 + 2.0 / a } else { 1.5 + 1.0 / a };
            assert!((b.lower - (1.0 + 1.0 / a)).abs() < 1e-12 && (b.upper - upper).abs() < 1e-12);
            assert!(b.lower > 1.0 && b.lower < b.upper);
        }
        for a in [2.6f64, 3.0, 4.0, 5.0] {
            let b = bound_interval(a, false).unwrap();
            assert!((b.lower - (1.0 + 2.0 / (2.0 * a - 1.0))).abs() < 1e-12);
            assert!((b.upper - (1.0 + 4.0 / a)).abs() < 1e-12);
        }
    }

    #[test]
    fn coverage_is_closed_at_three_decimals() {
        let b = bound_interval(3.0, false).unwrap();
        assert!(b.covers(1.4));
        assert!(b.covers(2.3334));
        assert!(!b.covers(2.3336));
        assert!(b.covers_upper(0.5));
    }

    #[test]
    fn limit_nk_monotone_in_epsilon() {
        let lf = limit_omega(&GraphexSpec::separable_shifted(2.0).unwrap()).unwrap();
        let a = limit_nk(&lf, 1.0, 1).unwrap().value;
        let b = limit_nk(&lf, 0.5, 1).unwrap().value;
        assert!(a <= b);
        assert!(limit_nk(&lf, 0.0, 1).is_err());
        assert!(limit_nk(&lf, 1.0, 0).is_err());
    }

    #[test]
    fn separable_ratio_is_constant() {
        let ev = MarginalEvaluator::new(GraphexSpec::separable_shifted(2.0).unwrap());
        let s = mu4_condition_scan(&ev, 1.0, 200, MU4_PROBE_BOX, 1).unwrap();
        assert!((s.sup_ratio - 9.0 / 7.0).abs() < 1e-9);
        let x = [0.3, 2.0, 7.0, 0.05];
        let swapped = [x[2], x[3], x[0], x[1]];
        assert!((mu4_ratio(&ev, x, 1.0).unwrap() - mu4_ratio(&ev, swapped, 1.0).unwrap()).abs() < 1e-12);
        assert!(mu4_condition_scan(&ev, 0.5, 10, MU4_PROBE_BOX, 1).is_err());
    }

    #[test]
    fn poisson_tail_vanishes() {
        let ev = MarginalEvaluator::new(GraphexSpec::separable_shifted(3.0).unwrap());
        let b = crate::model::scaling_b(ev.spec(), 1000.0).unwrap();
        let small = expected_nk_finite_t(&ev, 1000.0, 0.5, 60, b).unwrap().value;
        let one = expected_nk_finite_t(&ev, 1000.0, 0.5, 1, b).unwrap().value;
        assert!(small < 1e-12 * one);
    }
}
