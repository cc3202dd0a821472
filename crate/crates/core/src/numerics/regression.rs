use crate::error::{Error, Result};

/// Ordinary least squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// `1 - SS_res / SS_tot`, with `SS_tot` about the mean of `y`.
    pub r_squared: f64,
}

/// Unweighted OLS on raw `(x, y)` pairs. Needs at least two distinct `x`.
pub fn ols(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::Numeric("OLS needs at least two points".into()));
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::Numeric("OLS needs at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        // Constant response is fit exactly by a flat line.
        1.0
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// OLS of `ln y` on `ln x`; every coordinate must be strictly positive.
pub fn ols_loglog(points: &[(f64, f64)]) -> Result<LineFit> {
    let logged: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| {
            if x > 0.0 && y > 0.0 {
                Ok((x.ln(), y.ln()))
            } else {
                Err(Error::Domain(format!(
                    "log-log regression needs positive data, got ({x}, {y})"
                )))
            }
        })
        .collect::<Result<_>>()?;
    ols(&logged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let fit = ols_loglog(&[(1.0, 1.0), (2.0, 0.25), (4.0, 1.0 / 16.0)]).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn needs_distinct_x() {
        assert!(ols(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(ols(&[(1.0, 2.0)]).is_err());
    }

    #[test]
    fn rejects_non_positive() {
        assert!(matches!(ols_loglog(&[(1.0, 0.0), (2.0, 1.0)]), Err(Error::Domain(_))));
    }
}
