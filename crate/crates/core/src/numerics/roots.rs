use crate::error::{Error, Result};

/// Bisection for a sign change of `g` inside `[lo, hi]`.
///
/// Stops once the bracket width is below `abs_tol + rel_tol * |midpoint|`
/// and returns the midpoint of the final bracket.
pub fn bisect_monotone<G: FnMut(f64) -> Result<f64>>(
    mut g: G,
    bracket: (f64, f64),
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::RootNotBracketed(format!("invalid bracket [{lo}, {hi}]")));
    }
    let mut g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::RootNotBracketed(format!(
            "no sign change on [{lo:e}, {hi:e}] (g = {g_lo:e}, {g_hi:e})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= abs_tol + rel_tol * mid.abs() || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let g_mid = g(mid)?;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
