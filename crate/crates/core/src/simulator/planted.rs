//! Common neighbours of two planted vertices.
//!
//! Adding fixed values `x` and `y` to the Poisson process and connecting each
//! process point independently to both, the number of points linked to both
//! is `Poisson(t μ_2(x, y))` (up to truncation at `eta_max`).

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::points::band_edges;
use crate::error::{Error, Result};
use crate::model::GraphexSpec;
use crate::rng::{derive_seed, stream};

const TAG_PLANTED: u64 = 0x0070_6c61_6e74;

/// One draw of `C(x, y)`.
///
/// Within each η-band the points linked to both planted vertices are a
/// thinning of the band's points; the candidate count is
/// `Poisson(t · width · p̄)` with `p̄ = W(x, lo) W(y, lo)` and each candidate
/// is kept with probability `W(x, η) W(y, η) / p̄`.
pub fn sample_planted_pair(spec: &GraphexSpec, t: f64, eta_max: f64, x: f64, y: f64, seed: u64) -> Result<u64> {
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::Domain(format!(
            "planted values must be positive, got ({x}, {y})"
        )));
    }
    if x == y {
        return Err(Error::Domain("planted values must be distinct".into()));
    }
    if !(t > 0.0 && t.is_finite() && eta_max > 0.0 && eta_max.is_finite()) {
        return Err(Error::Domain(format!("need t, eta_max > 0, got ({t}, {eta_max})")));
    }
    let mut rng = stream(seed, &[TAG_PLANTED]);
    let mut count = 0u64;
    for w in band_edges(eta_max).windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let p_bar = if spec.is_monotone() {
            spec.w(x, lo) * spec.w(y, lo)
        } else {
            1.0
        };
        let rate = t * (hi - lo) * p_bar;
        if rate <= 0.0 {
            continue;
        }
        let candidates = Poisson::new(rate)
            .map_err(|e| Error::Numeric(e.to_string()))?
            .sample(&mut rng) as u64;
        for _ in 0..candidates {
            let eta = lo + (hi - lo) * rng.random::<f64>();
            let p = spec.w(x, eta) * spec.w(y, eta);
            if rng.random::<f64>() * p_bar < p {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `n` independent draws; draw `r` uses the seed `derive_seed(seed, [r])`.
pub fn sample_planted_pairs(
    spec: &GraphexSpec,
    t: f64,
    eta_max: f64,
    x: f64,
    y: f64,
    seed: u64,
    n: usize,
) -> Result<Vec<u64>> {
    (0..n)
        .into_par_iter()
        .map(|r| sample_planted_pair(spec, t, eta_max, x, y, derive_seed(seed, &[r as u64])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn rejects_equal_or_invalid_values() {
        let spec = GraphexSpec::sum_power_shifted(3.0).unwrap();
        assert!(sample_planted_pair(&spec, 10.0, 10.0, 1.0, 1.0, 0).is_err());
        assert!(sample_planted_pair(&spec, 10.0, 10.0, 0.0, 1.0, 0).is_err());
        assert!(sample_planted_pair(&spec, 0.0, 10.0, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn zero_graphex_gives_zero() {
        let spec = GraphexSpec::zero(2.0).unwrap();
        let draws = sample_planted_pairs(&spec, 100.0, 100.0, 1.0, 2.0, 3, 100).unwrap();
        assert!(draws.iter().all(|&c| c == 0));
    }

    #[test]
    fn non_monotone_bound_still_unbiased() {
        // W(x, z) = 1 on [0, 1)², 0 elsewhere: C(x, y) ~ Poisson(t) for x, y < 1.
        let w = Arc::new(|x: f64, y: f64| if x < 1.0 && y < 1.0 { 1.0 } else { 0.0 });
        let spec = GraphexSpec::custom_symmetric(w, 2.0, false, false).unwrap();
        let draws = sample_planted_pairs(&spec, 20.0, 5.0, 0.2, 0.3, 1, 4000).unwrap();
        let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
        assert!((mean - 20.0).abs() < 3.0 * (20.0f64 / 4000.0).sqrt(), "{mean}");
    }
}
