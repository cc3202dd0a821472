//! Chi-square goodness-of-fit, two-sample homogeneity and dispersion checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Minimum expected count per pooled bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
    /// True when every observation and all expected mass sit in a single
    /// bin, so there is nothing to test; such results report `p_value = 1`.
    pub degenerate: bool,
}

fn chi2_sf(statistic: f64, dof: usize) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(dist.sf(statistic))
}

/// Pools consecutive categories until each bin carries at least
/// `MIN_EXPECTED` expected observations; an underfull remainder is merged
/// into the last bin.
fn pool(observed: &[u64], expected: &[f64]) -> Vec<(f64, f64)> {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &exp) in observed.iter().zip(expected) {
        o += obs as f64;
        e += exp;
        if e >= MIN_EXPECTED {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    bins
}

/// Pearson chi-square test of observed category counts against category
/// probabilities (which must cover all outcomes, tail category included).
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<GofResult> {
    if observed.len() != probs.len() {
        return Err(Error::Domain("observed and expected lengths differ".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::Domain("no observations".into()));
    }
    let expected: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let bins = pool(observed, &expected);
    if bins.len() < 2 {
        return Ok(GofResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins: bins.len(),
            degenerate: true,
        });
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = bins.len() - 1;
    Ok(GofResult {
        statistic,
        dof,
        p_value: chi2_sf(statistic, dof)?,
        bins: bins.len(),
        degenerate: false,
    })
}

pub fn poisson_pmf(k: u64, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * rate.ln() - rate - ln_factorial(k)).exp()
}

/// Goodness of fit of integer draws against `Poisson(rate)`.
///
/// A zero rate is degenerate: all-zero draws pass with `p = 1`, anything
/// else fails with `p = 0`.
pub fn poisson_gof(samples: &[u64], rate: f64) -> Result<GofResult> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!(
            "Poisson rate must be finite and non-negative, got {rate}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Domain("no observations".into()));
    }
    if rate == 0.0 {
        let all_zero = samples.iter().all(|&s| s == 0);
        return Ok(GofResult {
            statistic: if all_zero { 0.0 } else { f64::INFINITY },
            dof: 0,
            p_value: if all_zero { 1.0 } else { 0.0 },
            bins: 1,
            degenerate: true,
        });
    }
    let max = *samples.iter().max().unwrap_or(&0) as usize;
    let mut observed = vec![0u64; max + 2];
    for &s in samples {
        observed[s as usize] += 1;
    }
    let mut probs: Vec<f64> = (0..=max as u64).map(|k| poisson_pmf(k, rate)).collect();
    let head: f64 = probs.iter().sum();
    // Final category is "more than max"; no draws land there by construction.
    probs.push((1.0 - head).max(0.0));
    chi_square_gof(&observed, &probs)
}

/// Two-sample chi-square homogeneity test on integer-valued samples.
///
/// Bins are equal-frequency ranges of the pooled sample (at most
/// `max_bins`, boundaries on distinct values), then a 2×K contingency
/// statistic with `K - 1` degrees of freedom is computed.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], max_bins: usize) -> Result<GofResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("both samples must be non-empty".into()));
    }
    let mut pooled: Vec<u64> = a.iter().chain(b).copied().collect();
    pooled.sort_unstable();
    let total = pooled.len();
    let target = (total as f64 / max_bins.max(1) as f64).max(2.0 * MIN_EXPECTED);

    // Upper edges (inclusive) of each bin.
    let mut edges: Vec<u64> = Vec::new();
    let mut start = 0usize;
    while start < total {
        let mut end = (start as f64 + target).ceil() as usize;
        if end >= total {
            end = total;
        } else {
            let v = pooled[end - 1];
            while end < total && pooled[end] == v {
                end += 1;
            }
        }
        edges.push(pooled[end - 1]);
        start = end;
    }
    // Merge an underfull final bin into its neighbour.
    if edges.len() >= 2 {
        let last_lo = edges[edges.len() - 2];
        let tail = pooled.iter().filter(|&&v| v > last_lo).count();
        if (tail as f64) < target / 2.0 {
            let last = edges.pop().unwrap();
            *edges.last_mut().unwrap() = last;
        }
    }
    let k = edges.len();
    if k < 2 {
        return Ok(GofResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins: k,
            degenerate: true,
        });
    }
    let bin_of = |v: u64| edges.partition_point(|&e| e < v);
    let mut ca = vec![0f64; k];
    let mut cb = vec![0f64; k];
    for &v in a {
        ca[bin_of(v)] += 1.0;
    }
    for &v in b {
        cb[bin_of(v)] += 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let mut statistic = 0.0;
    for i in 0..k {
        let col = ca[i] + cb[i];
        let ea = col * na / n;
        let eb = col * nb / n;
        statistic += (ca[i] - ea).powi(2) / ea + (cb[i] - eb).powi(2) / eb;
    }
    let dof = k - 1;
    Ok(GofResult {
        statistic,
        dof,
        p_value: chi2_sf(statistic, dof)?,
        bins: k,
        degenerate: false,
    })
}

/// Index of dispersion `s² / x̄` (unbiased sample variance over mean).
pub fn dispersion_index(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Domain("dispersion index needs at least two samples".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::Domain("dispersion index undefined for non-positive mean".into()));
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var / mean)
}

/// Mean and standard error of the mean.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
