//! Graphex function families, their marginals and regular-variation limits.
//!
//! A graphex function `W: [0,∞)² → [0,1]` is symmetric and integrable. The
//! marginals are `μ_d(x_1..x_d) = ∫_0^∞ Π W(x_i, z) dz`; `μ_1` governs the
//! expected degree of a vertex with latent value `x` and `μ_2` the expected
//! number of common neighbours of two vertices.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::numerics::{bisect_monotone, integrate_2d, integrate_semi_infinite, QuadratureResult, Tolerance};

pub type UnivariateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type BivariateFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `W(x,y) = (1+x+y)^(−α)`
    SumPowerShifted,
    /// `W(x,y) = 1/(1+x^α+y^α)`
    SumPowerStable,
    /// `W(x,y) = (1+x)^(−α)(1+y)^(−α)`
    SeparableShifted,
    /// `W(x,y) = U(x)U(y)` for a user-supplied `U` with values in `[0,1]`.
    CustomSeparable { u: UnivariateFn, monotone: bool },
    /// Arbitrary symmetric `W`. The optional limit function `ω` and scaling
    /// `h` enable the regular-variation machinery.
    CustomSymmetric {
        w: BivariateFn,
        omega: Option<BivariateFn>,
        scaling_h: Option<UnivariateFn>,
        monotone: bool,
    },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::SumPowerShifted => write!(f, "SumPowerShifted"),
            Family::SumPowerStable => write!(f, "SumPowerStable"),
            Family::SeparableShifted => write!(f, "SeparableShifted"),
            Family::CustomSeparable { monotone, .. } => {
                write!(f, "CustomSeparable {{ monotone: {monotone} }}")
            }
            Family::CustomSymmetric { monotone, omega, .. } => write!(
                f,
                "CustomSymmetric {{ monotone: {monotone}, omega: {} }}",
                omega.is_some()
            ),
        }
    }
}

/// Family names usable in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    SumPowerShifted,
    SumPowerStable,
    SeparableShifted,
    /// `W ≡ 0`; only useful for degenerate checks.
    Zero,
}

impl FamilyName {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sum_power_shifted" => Some(Self::SumPowerShifted),
            "sum_power_stable" => Some(Self::SumPowerStable),
            "separable_shifted" => Some(Self::SeparableShifted),
            "zero" => Some(Self::Zero),
            _ => None,
        }
    }
}

/// Serializable description of a built-in graphex function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecConfig {
    pub family: FamilyName,
    pub alpha: f64,
}

impl SpecConfig {
    /// Parses `family:alpha`, e.g. `separable-shifted:3`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, alpha) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("spec `{s}` is not of the form family:alpha")))?;
        let family =
            FamilyName::parse(name.trim()).ok_or_else(|| Error::Config(format!("unknown graphex family `{name}`")))?;
        let alpha: f64 = alpha
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad alpha `{alpha}`")))?;
        Ok(Self { family, alpha })
    }

    pub fn build(&self) -> Result<GraphexSpec> {
        match self.family {
            FamilyName::SumPowerShifted => GraphexSpec::sum_power_shifted(self.alpha),
            FamilyName::SumPowerStable => GraphexSpec::sum_power_stable(self.alpha),
            FamilyName::SeparableShifted => GraphexSpec::separable_shifted(self.alpha),
            FamilyName::Zero => GraphexSpec::zero(self.alpha),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GraphexSpec {
    family: Family,
    alpha: f64,
    separable: bool,
    config: Option<SpecConfig>,
}

fn check_alpha(alpha: f64, min: f64, what: &str) -> Result<()> {
    if alpha.is_finite() && alpha > min {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires alpha > {min}, got {alpha}")))
    }
}

impl GraphexSpec {
    pub fn sum_power_shifted(alpha: f64) -> Result<Self> {
        check_alpha(alpha, 1.0, "SumPowerShifted")?;
        Ok(Self {
            family: Family::SumPowerShifted,
            alpha,
            separable: false,
            config: Some(SpecConfig {
                family: FamilyName::SumPowerShifted,
                alpha,
            }),
        })
    }

    pub fn sum_power_stable(alpha: f64) -> Result<Self> {
        check_alpha(alpha, 1.0, "SumPowerStable")?;
        Ok(Self {
            family: Family::SumPowerStable,
            alpha,
            separable: false,
            config: Some(SpecConfig {
                family: FamilyName::SumPowerStable,
                alpha,
            }),
        })
    }

    pub fn separable_shifted(alpha: f64) -> Result<Self> {
        check_alpha(alpha, 1.0, "SeparableShifted")?;
        Ok(Self {
            family: Family::SeparableShifted,
            alpha,
            separable: true,
            config: Some(SpecConfig {
                family: FamilyName::SeparableShifted,
                alpha,
            }),
        })
    }

    pub fn custom_separable(u: UnivariateFn, alpha: f64, monotone: bool) -> Result<Self> {
        check_alpha(alpha, 0.0, "CustomSeparable")?;
        Ok(Self {
            family: Family::CustomSeparable { u, monotone },
            alpha,
            separable: true,
            config: None,
        })
    }

    /// `alpha` and `separable` are taken on trust; [`GraphexSpec::validate`]
    /// probes them and reports mismatches as warnings.
    pub fn custom_symmetric(w: BivariateFn, alpha: f64, separable: bool, monotone: bool) -> Result<Self> {
        check_alpha(alpha, 0.0, "CustomSymmetric")?;
        Ok(Self {
            family: Family::CustomSymmetric {
                w,
                omega: None,
                scaling_h: None,
                monotone,
            },
            alpha,
            separable,
            config: None,
        })
    }

    /// Attaches a limit function and scaling function to a custom symmetric family.
    pub fn with_limit(mut self, omega: BivariateFn, scaling_h: UnivariateFn) -> Result<Self> {
        match &mut self.family {
            Family::CustomSymmetric {
                omega: o, scaling_h: h, ..
            } => {
                *o = Some(omega);
                *h = Some(scaling_h);
                Ok(self)
            }
            _ => Err(Error::Domain(
                "limit functions can only be attached to custom symmetric families".into(),
            )),
        }
    }

    /// The edgeless graphex `W ≡ 0`.
    pub fn zero(alpha: f64) -> Result<Self> {
        let mut spec = Self::custom_symmetric(Arc::new(|_, _| 0.0), alpha, false, true)?;
        spec.config = Some(SpecConfig {
            family: FamilyName::Zero,
            alpha,
        });
        Ok(spec)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_separable(&self) -> bool {
        self.separable
    }

    /// Whether `W` is nonincreasing in each coordinate, which lets samplers
    /// bound `W` on a box by its lower corner.
    pub fn is_monotone(&self) -> bool {
        match &self.family {
            Family::SumPowerShifted | Family::SumPowerStable | Family::SeparableShifted => true,
            Family::CustomSeparable { monotone, .. } | Family::CustomSymmetric { monotone, .. } => *monotone,
        }
    }

    pub fn config(&self) -> Option<SpecConfig> {
        self.config
    }

    pub fn label(&self) -> String {
        match (&self.family, self.config) {
            (_, Some(c)) => format!("{:?}(alpha={})", c.family, c.alpha),
            (f, None) => format!("{f:?}(alpha={})", self.alpha),
        }
    }

    /// `U(x)` for separable families.
    pub fn u(&self, x: f64) -> Option<f64> {
        match &self.family {
            Family::SeparableShifted => Some((1.0 + x).powf(-self.alpha)),
            Family::CustomSeparable { u, .. } => Some(u(x)),
            _ => None,
        }
    }

    /// Unchecked evaluation of `W(x, y)` for hot loops.
    #[inline]
    pub fn w(&self, x: f64, y: f64) -> f64 {
        let a = self.alpha;
        match &self.family {
            Family::SumPowerShifted => (1.0 + x + y).powf(-a),
            Family::SumPowerStable => 1.0 / (1.0 + x.powf(a) + y.powf(a)),
            Family::SeparableShifted => ((1.0 + x) * (1.0 + y)).powf(-a),
            Family::CustomSeparable { u, .. } => u(x) * u(y),
            Family::CustomSymmetric { w, .. } => w(x, y),
        }
    }

    /// `W(x, y)` with domain checks.
    pub fn eval_w(&self, x: f64, y: f64) -> Result<f64> {
        if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::Domain(format!(
                "W needs finite non-negative arguments, got ({x}, {y})"
            )));
        }
        Ok(self.w(x, y))
    }

    /// Checks the graphex criteria by random probing: symmetry, range
    /// `[0, 1]`, and a finite positive `∬W`. Custom families also get a
    /// numerical homogeneity/separability probe whose mismatches are returned
    /// as warnings rather than errors.
    pub fn validate(&self, probes: usize, seed: u64) -> Result<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..probes {
            let x = (rng.random::<f64>() * 12.0 - 4.0).exp();
            let y = (rng.random::<f64>() * 12.0 - 4.0).exp();
            let (wxy, wyx) = (self.w(x, y), self.w(y, x));
            if !(0.0..=1.0).contains(&wxy) {
                return Err(Error::Domain(format!("W({x}, {y}) = {wxy} outside [0, 1]")));
            }
            if (wxy - wyx).abs() > 1e-12 * wxy.abs().max(1e-300) {
                return Err(Error::Domain(format!("W is not symmetric at ({x}, {y})")));
            }
        }
        let w_bar = MarginalEvaluator::new(self.clone()).w_bar()?;
        let mut warnings = Vec::new();
        if w_bar <= 0.0 {
            warnings.push("double integral of W is zero; the graph is empty".to_string());
        }
        if matches!(
            self.family,
            Family::CustomSymmetric { .. } | Family::CustomSeparable { .. }
        ) {
            // Index of regular variation along the diagonal.
            let expected = if self.separable { 2.0 * self.alpha } else { self.alpha };
            let t = 1e6;
            let (a, b) = (self.w(t, t), self.w(2.0 * t, 2.0 * t));
            if a > 0.0 && b > 0.0 {
                let index = -(b / a).log2();
                if (index - expected).abs() > 0.05 * expected {
                    warnings.push(format!(
                        "diagonal decay index {index:.3} does not match declared {expected:.3}"
                    ));
                }
            }
            if self.separable {
                for _ in 0..probes.min(64) {
                    let p: Vec<f64> = (0..4).map(|_| (rng.random::<f64>() * 6.0 - 2.0).exp()).collect();
                    let lhs = self.w(p[0], p[1]) * self.w(p[2], p[3]);
                    let rhs = self.w(p[0], p[3]) * self.w(p[2], p[1]);
                    if (lhs - rhs).abs() > 1e-9 * lhs.abs().max(rhs.abs()).max(1e-300) {
                        warnings.push("W declared separable but W(a,b)W(c,d) != W(a,d)W(c,b)".into());
                        break;
                    }
                }
            }
        }
        Ok(warnings)
    }
}

/// How marginals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginalMode {
    /// Use an analytic expression when the family provides one, quadrature otherwise.
    ClosedForm,
    /// Always integrate numerically.
    Quadrature,
}

#[derive(Clone, Debug)]
pub struct MarginalEvaluator {
    spec: GraphexSpec,
    mode: MarginalMode,
    tolerance: Tolerance,
}

fn check_point(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "marginal argument must be finite and non-negative, got {x}"
        )))
    }
}

fn converged(r: QuadratureResult) -> Result<f64> {
    if r.converged {
        Ok(r.value)
    } else {
        Err(Error::QuadratureNonconvergence {
            estimate: r.value,
            error_estimate: r.error_estimate,
        })
    }
}

/// `∫_0^∞ (c + z^α)^(−d) dz = c^(1/α − d) · B(1/α, d − 1/α) / α`.
fn stable_power_integral(c: f64, alpha: f64, d: f64) -> f64 {
    let inv = 1.0 / alpha;
    ((inv - d) * c.ln() + ln_beta(inv, d - inv)).exp() * inv
}

impl MarginalEvaluator {
    pub fn new(spec: GraphexSpec) -> Self {
        Self {
            spec,
            mode: MarginalMode::ClosedForm,
            tolerance: Tolerance::default(),
        }
    }

    pub fn with_mode(mut self, mode: MarginalMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn spec(&self) -> &GraphexSpec {
        &self.spec
    }

    pub fn mode(&self) -> MarginalMode {
        self.mode
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    fn closed(&self) -> bool {
        self.mode == MarginalMode::ClosedForm
    }

    /// `∫_0^∞ U(z)^d dz` for separable families.
    fn u_power_integral(&self, d: usize) -> Result<f64> {
        match &self.spec.family {
            Family::SeparableShifted if self.closed() => Ok(1.0 / (d as f64 * self.spec.alpha - 1.0)),
            _ => {
                let spec = &self.spec;
                converged(integrate_semi_infinite(
                    |z| spec.u(z).unwrap_or(0.0).powi(d as i32),
                    0.0,
                    self.tolerance,
                ))
            }
        }
    }

    fn quadrature_product(&self, xs: &[f64]) -> Result<f64> {
        let spec = &self.spec;
        converged(integrate_semi_infinite(
            |z| xs.iter().map(|&x| spec.w(x, z)).product(),
            0.0,
            self.tolerance,
        ))
    }

    /// `μ_1(x) = ∫_0^∞ W(x, z) dz`.
    pub fn mu1(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        let a = self.spec.alpha;
        if self.closed() {
            match &self.spec.family {
                Family::SumPowerShifted => return Ok((1.0 + x).powf(1.0 - a) / (a - 1.0)),
                Family::SumPowerStable => return Ok(stable_power_integral(1.0 + x.powf(a), a, 1.0)),
                Family::SeparableShifted | Family::CustomSeparable { .. } => {
                    return Ok(self.spec.u(x).unwrap() * self.u_power_integral(1)?)
                }
                Family::CustomSymmetric { .. } => {}
            }
        }
        self.quadrature_product(&[x])
    }

    /// `μ_2(x, y) = ∫_0^∞ W(x, z) W(y, z) dz`.
    pub fn mu2(&self, x: f64, y: f64) -> Result<f64> {
        self.mu_d(&[x, y])
    }

    /// `μ_d(x_1, …, x_d) = ∫_0^∞ Π W(x_i, z) dz`.
    ///
    /// The marginal is usually stated for pairwise distinct arguments; equal
    /// arguments are accepted here since the integral is still well defined.
    pub fn mu_d(&self, xs: &[f64]) -> Result<f64> {
        if xs.is_empty() {
            return Err(Error::Domain("mu_d needs at least one argument".into()));
        }
        for &x in xs {
            check_point(x)?;
        }
        let a = self.spec.alpha;
        let d = xs.len();
        let all_equal = xs.iter().all(|&x| x == xs[0]);
        if self.closed() {
            match &self.spec.family {
                Family::SeparableShifted | Family::CustomSeparable { .. } => {
                    let prod: f64 = xs.iter().map(|&x| self.spec.u(x).unwrap()).product();
                    return Ok(prod * self.u_power_integral(d)?);
                }
                Family::SumPowerShifted if all_equal => {
                    let da = d as f64 * a;
                    return Ok((1.0 + xs[0]).powf(1.0 - da) / (da - 1.0));
                }
                Family::SumPowerStable if all_equal => {
                    return Ok(stable_power_integral(1.0 + xs[0].powf(a), a, d as f64));
                }
                _ => {}
            }
        }
        self.quadrature_product(xs)
    }

    /// `∫_η^∞ μ_1(y) dy`, the expected number of edges (per `t²`) incident to
    /// vertices above `η`. Infinite when `μ_1` is not integrable.
    pub fn mu1_tail_integral(&self, eta: f64) -> Result<f64> {
        check_point(eta)?;
        let a = self.spec.alpha;
        if self.closed() {
            match &self.spec.family {
                Family::SumPowerShifted => {
                    return Ok(if a > 2.0 {
                        (1.0 + eta).powf(2.0 - a) / ((a - 1.0) * (a - 2.0))
                    } else {
                        f64::INFINITY
                    })
                }
                Family::SeparableShifted => return Ok((1.0 + eta).powf(1.0 - a) / ((a - 1.0) * (a - 1.0))),
                Family::SumPowerStable if a <= 2.0 => return Ok(f64::INFINITY),
                _ => {}
            }
        }
        let r = integrate_semi_infinite(|y| self.mu1(y).unwrap_or(f64::NAN), eta, self.tolerance);
        if r.value.is_nan() {
            return Err(Error::Numeric("mu1 failed inside its tail integral".into()));
        }
        converged(r)
    }

    /// `W̄ = ∬ W(x, y) dx dy`.
    pub fn w_bar(&self) -> Result<f64> {
        if self.closed() {
            let a = self.spec.alpha;
            match &self.spec.family {
                Family::SumPowerShifted if a > 2.0 => return Ok(1.0 / ((a - 1.0) * (a - 2.0))),
                Family::SeparableShifted => return Ok(1.0 / ((a - 1.0) * (a - 1.0))),
                _ => {}
            }
        }
        let spec = &self.spec;
        converged(integrate_2d(|x, y| spec.w(x, y), (0.0, 0.0), self.tolerance))
    }
}

/// Regular-variation limits of `W` and `μ_2`.
///
/// `ω` is the limit of `W(tx, ty)/h(t)`, `λ(x, y) = ∫ ω(x,z) ω(y,z) dz`
/// (times `C = ∫U²` in the separable case) and `γ` is the index with
/// `b ∈ RV_{1/γ}`: `2α − 1` for non-separable and `2α` for separable `W`.
#[derive(Clone, Debug)]
pub struct LimitFunctions {
    spec: GraphexSpec,
    gamma: f64,
    separable_constant: Option<f64>,
    tolerance: Tolerance,
}

impl LimitFunctions {
    pub fn spec(&self) -> &GraphexSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `C = ∫_0^∞ U²(z) dz` for separable families.
    pub fn separable_constant(&self) -> Option<f64> {
        self.separable_constant
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    fn check_positive(x: f64, y: f64) -> Result<()> {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "limit functions need positive arguments, got ({x}, {y})"
            )))
        }
    }

    #[inline]
    fn omega_unchecked(&self, x: f64, y: f64) -> f64 {
        let a = self.spec.alpha;
        match &self.spec.family {
            Family::SumPowerShifted => (x + y).powf(-a),
            Family::SumPowerStable => 1.0 / (x.powf(a) + y.powf(a)),
            Family::SeparableShifted | Family::CustomSeparable { .. } => (x * y).powf(-a),
            Family::CustomSymmetric { omega, .. } => omega.as_ref().map_or(f64::NAN, |o| o(x, y)),
        }
    }

    pub fn omega(&self, x: f64, y: f64) -> Result<f64> {
        Self::check_positive(x, y)?;
        Ok(self.omega_unchecked(x, y))
    }

    /// `lim μ_1(tx) / (t h(t)) = ∫_0^∞ ω(x, y) dy` (non-separable families).
    pub fn omega_bar(&self, x: f64) -> Result<f64> {
        Self::check_positive(x, 1.0)?;
        let a = self.spec.alpha;
        match &self.spec.family {
            Family::SumPowerShifted => Ok(x.powf(1.0 - a) / (a - 1.0)),
            Family::SumPowerStable => Ok(x.powf(1.0 - a) * (PI / a) / (PI / a).sin()),
            _ => converged(integrate_semi_infinite(
                |y| self.omega_unchecked(x, y),
                0.0,
                self.tolerance,
            )),
        }
    }

    /// Scaling function: `h(t)` for non-separable `W`, `U²(t)` for separable `W`.
    pub fn scaling_h(&self, t: f64) -> f64 {
        let a = self.spec.alpha;
        match &self.spec.family {
            Family::SumPowerShifted | Family::SumPowerStable => t.powf(-a),
            Family::SeparableShifted | Family::CustomSeparable { .. } => self.spec.u(t).unwrap().powi(2),
            Family::CustomSymmetric { scaling_h, .. } => scaling_h.as_ref().map_or(f64::NAN, |h| h(t)),
        }
    }

    /// `λ(x, y)`, the limit of `t μ_2(b(t)x, b(t)y)`.
    pub fn lambda(&self, x: f64, y: f64) -> Result<f64> {
        Self::check_positive(x, y)?;
        if let Some(c) = self.separable_constant {
            return Ok(c * (x * y).powf(-self.spec.alpha));
        }
        let a = self.spec.alpha;
        match &self.spec.family {
            Family::SumPowerShifted if x == y => Ok(x.powf(1.0 - 2.0 * a) / (2.0 * a - 1.0)),
            Family::SumPowerStable if x == y => Ok(stable_power_integral(x.powf(a), a, 2.0)),
            _ => converged(integrate_semi_infinite(
                |z| self.omega_unchecked(x, z) * self.omega_unchecked(y, z),
                0.0,
                self.tolerance,
            )),
        }
    }
}

/// Builds the limit functions of a spec.
///
/// Custom symmetric families need an attached `ω` (see
/// [`GraphexSpec::with_limit`]).
pub fn limit_omega(spec: &GraphexSpec) -> Result<LimitFunctions> {
    limit_omega_with(spec, Tolerance::default())
}

pub fn limit_omega_with(spec: &GraphexSpec, tolerance: Tolerance) -> Result<LimitFunctions> {
    let a = spec.alpha;
    let (gamma, separable_constant) = match &spec.family {
        Family::SeparableShifted => (2.0 * a, Some(1.0 / (2.0 * a - 1.0))),
        Family::CustomSeparable { .. } => {
            let ev = MarginalEvaluator::new(spec.clone()).with_tolerance(tolerance);
            (2.0 * a, Some(ev.u_power_integral(2)?))
        }
        Family::CustomSymmetric { omega: None, .. } => {
            return Err(Error::Domain("custom graphex has no limit function attached".into()))
        }
        _ if spec.separable => (2.0 * a, None),
        _ => (2.0 * a - 1.0, None),
    };
    Ok(LimitFunctions {
        spec: spec.clone(),
        gamma,
        separable_constant,
        tolerance,
    })
}

/// The scaling `b(t)` used to normalise latent values.
///
/// Separable: the generalised inverse of `1/U` at `√t`. Non-separable: the
/// root of `t μ_2(b, b) = λ(1, 1)`, so the limit holds exactly on the
/// diagonal at every finite `t`.
pub fn scaling_b(spec: &GraphexSpec, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("scaling_b needs t > 0, got {t}")));
    }
    let a = spec.alpha;
    match &spec.family {
        Family::SeparableShifted => Ok((t.powf(1.0 / (2.0 * a)) - 1.0).max(0.0)),
        Family::CustomSeparable { u, .. } => {
            let target = t.sqrt();
            let inv_u = |x: f64| 1.0 / u(x);
            if inv_u(0.0) >= target {
                return Ok(0.0);
            }
            let mut hi = 1.0;
            while inv_u(hi) < target {
                hi *= 2.0;
                if !hi.is_finite() || hi > 1e300 {
                    return Err(Error::RootNotBracketed("1/U never reaches sqrt(t)".into()));
                }
            }
            bisect_monotone(|x| Ok(inv_u(x) - target), (0.0, hi), 0.0, 1e-12)
        }
        _ => {
            let lf = limit_omega(spec)?;
            let ev = MarginalEvaluator::new(spec.clone()).with_tolerance(Tolerance::relative(1e-12));
            let target = lf.lambda(1.0, 1.0)?;
            let g = |b: f64| -> Result<f64> { Ok(t * ev.mu2(b, b)? - target) };
            if g(0.0)? <= 0.0 {
                return Err(Error::RootNotBracketed(format!(
                    "t = {t} too small: t·mu2(0,0) does not exceed lambda(1,1)"
                )));
            }
            let mut hi = 1.0;
            while g(hi)? > 0.0 {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::RootNotBracketed("no sign change found".into()));
                }
            }
            bisect_monotone(g, (0.0, hi), 0.0, 1e-13)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sps(a: f64) -> GraphexSpec {
        GraphexSpec::sum_power_shifted(a).unwrap()
    }

    #[test]
    fn eval_w_examples() {
        assert_eq!(sps(3.0).eval_w(0.0, 0.0).unwrap(), 1.0);
        let stable = GraphexSpec::sum_power_stable(2.0).unwrap();
        assert_relative_eq!(stable.eval_w(1.0, 1.0).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        let sep = GraphexSpec::separable_shifted(2.0).unwrap();
        assert_relative_eq!(sep.eval_w(1.0, 3.0).unwrap(), 0.015625, max_relative = 1e-15);
        assert!(matches!(sps(3.0).eval_w(-1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(sps(3.0).eval_w(f64::NAN, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn alpha_constraints() {
        assert!(GraphexSpec::sum_power_shifted(1.0).is_err());
        assert!(GraphexSpec::separable_shifted(0.5).is_err());
        assert!(GraphexSpec::sum_power_stable(f64::INFINITY).is_err());
    }

    #[test]
    fn mu1_examples() {
        let ev = MarginalEvaluator::new(sps(3.0));
        assert_relative_eq!(ev.mu1(0.0).unwrap(), 0.5, max_relative = 1e-15);
        let ev = MarginalEvaluator::new(GraphexSpec::separable_shifted(2.0).unwrap());
        assert_relative_eq!(ev.mu1(0.0).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn mu2_and_mu_d_examples() {
        // ∫(2+z)^-6 = 2^-5/5.
        for mode in [MarginalMode::ClosedForm, MarginalMode::Quadrature] {
            let ev = MarginalEvaluator::new(sps(3.0)).with_mode(mode);
            assert_relative_eq!(ev.mu2(1.0, 1.0).unwrap(), 0.00625, max_relative = 1e-9);
            assert_relative_eq!(ev.mu_d(&[0.0; 4]).unwrap(), 1.0 / 11.0, max_relative = 1e-9);
            let sep = MarginalEvaluator::new(GraphexSpec::separable_shifted(2.0).unwrap()).with_mode(mode);
            assert_relative_eq!(
                sep.mu_d(&[1.0, 2.0, 3.0]).unwrap(),
                1.0 / 576.0 / 5.0,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        use rand::Rng;
        let specs = [
            sps(3.0),
            sps(2.5),
            GraphexSpec::sum_power_stable(2.0).unwrap(),
            GraphexSpec::sum_power_stable(3.5).unwrap(),
            GraphexSpec::separable_shifted(1.5).unwrap(),
            GraphexSpec::separable_shifted(3.0).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in specs {
            let closed = MarginalEvaluator::new(spec.clone());
            let quad = MarginalEvaluator::new(spec.clone()).with_mode(MarginalMode::Quadrature);
            for _ in 0..100 {
                let x = (rng.random::<f64>() * 10.0 - 4.0).exp();
                let c = closed.mu1(x).unwrap();
                let q = quad.mu1(x).unwrap();
                assert!((c - q).abs() <= 1e-8, "{spec:?} x={x}: {c} vs {q}");
                let (c2, q2) = (closed.mu2(x, x).unwrap(), quad.mu2(x, x).unwrap());
                assert!(
                    (c2 - q2).abs() <= 1e-9 * c2.abs().max(1e-300) + 1e-15,
                    "{spec:?} mu2 x={x}"
                );
            }
        }
    }

    #[test]
    fn mu2_bounded_by_mu1_and_symmetric() {
        let ev = MarginalEvaluator::new(GraphexSpec::sum_power_stable(2.5).unwrap());
        for &(x, y) in &[(0.1, 3.0), (2.0, 0.5), (7.0, 7.5)] {
            let m = ev.mu2(x, y).unwrap();
            assert!(m <= ev.mu1(x).unwrap().min(ev.mu1(y).unwrap()));
            assert_relative_eq!(m, ev.mu2(y, x).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn separable_factorisation() {
        let spec = GraphexSpec::separable_shifted(2.0).unwrap();
        let lf = limit_omega(&spec).unwrap();
        let c = lf.separable_constant().unwrap();
        assert_relative_eq!(c, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(
            lf.lambda(1.5, 2.0).unwrap(),
            (1.0 / 3.0) * 1.5f64.powi(-2) * 0.25,
            max_relative = 1e-14
        );
        let quad = MarginalEvaluator::new(spec.clone()).with_mode(MarginalMode::Quadrature);
        for &(x, y) in &[(0.0, 1.0), (0.3, 4.0), (10.0, 2.0)] {
            let expected = c * spec.u(x).unwrap() * spec.u(y).unwrap();
            assert_relative_eq!(quad.mu2(x, y).unwrap(), expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn lambda_homogeneity() {
        let sep = limit_omega(&GraphexSpec::separable_shifted(2.0).unwrap()).unwrap();
        assert_eq!(sep.gamma(), 4.0);
        let (x, y) = (0.7, 1.9);
        assert_relative_eq!(
            sep.lambda(2.0 * x, 2.0 * y).unwrap(),
            2f64.powf(-4.0) * sep.lambda(x, y).unwrap(),
            max_relative = 1e-12
        );
        let non = limit_omega(&sps(3.0)).unwrap();
        assert_eq!(non.gamma(), 5.0);
        assert_relative_eq!(
            non.lambda(2.0 * x, 2.0 * y).unwrap(),
            2f64.powf(-5.0) * non.lambda(x, y).unwrap(),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            non.omega(3.0 * x, 3.0 * y).unwrap(),
            3f64.powf(-3.0) * non.omega(x, y).unwrap(),
            max_relative = 1e-10
        );
        assert!(non.lambda(0.0, 1.0).is_err());
    }

    #[test]
    fn stable_lambda_closed_form() {
        let lf = limit_omega(&GraphexSpec::sum_power_stable(2.0).unwrap()).unwrap();
        assert_relative_eq!(lf.lambda(1.0, 1.0).unwrap(), PI / 4.0, max_relative = 1e-12);
        // Off-diagonal goes through quadrature: π / (2x²y + 2xy²).
        let (x, y) = (0.5, 2.0);
        assert_relative_eq!(
            lf.lambda(x, y).unwrap(),
            PI / (2.0 * x * x * y + 2.0 * x * y * y),
            max_relative = 1e-8
        );
    }

    #[test]
    fn scaling_b_examples() {
        let sep = GraphexSpec::separable_shifted(2.0).unwrap();
        assert_relative_eq!(scaling_b(&sep, 16.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(scaling_b(&sep, 0.5).unwrap(), 0.0);
        let spec = sps(3.0);
        let ev = MarginalEvaluator::new(spec.clone());
        let lam = limit_omega(&spec).unwrap().lambda(1.0, 1.0).unwrap();
        let mut prev = 0.0;
        for t in [1e3, 1e4, 1e5] {
            let b = scaling_b(&spec, t).unwrap();
            assert!((t * ev.mu2(b, b).unwrap() - lam).abs() <= 1e-8);
            assert_relative_eq!(b, t.powf(0.2) - 1.0, max_relative = 1e-10);
            assert!(b > prev);
            prev = b;
        }
        assert!(matches!(scaling_b(&spec, 0.5), Err(Error::RootNotBracketed(_))));
        assert!(scaling_b(&spec, 0.0).is_err());
    }

    #[test]
    fn custom_separable_matches_builtin() {
        let builtin = GraphexSpec::separable_shifted(2.0).unwrap();
        let custom = GraphexSpec::custom_separable(Arc::new(|x: f64| (1.0 + x).powi(-2)), 2.0, true).unwrap();
        for t in [16.0, 100.0, 1e4] {
            assert_relative_eq!(
                scaling_b(&custom, t).unwrap(),
                scaling_b(&builtin, t).unwrap(),
                max_relative = 1e-9
            );
        }
        let lf = limit_omega(&custom).unwrap();
        assert_relative_eq!(lf.separable_constant().unwrap(), 1.0 / 3.0, max_relative = 1e-9);
        let ev = MarginalEvaluator::new(custom);
        assert_relative_eq!(
            ev.mu2(1.0, 3.0).unwrap(),
            0.25 * (1.0 / 16.0) / 3.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn validation_probes() {
        assert!(sps(3.0).validate(200, 1).unwrap().is_empty());
        let bad = GraphexSpec::custom_symmetric(
            Arc::new(|x: f64, y: f64| (1.0 + x + 2.0 * y).powi(-3)),
            3.0,
            false,
            true,
        )
        .unwrap();
        assert!(bad.validate(200, 1).is_err());
        // Declares the wrong index: diagonal decays like t^-3, not t^-5.
        let mislabeled =
            GraphexSpec::custom_symmetric(Arc::new(|x: f64, y: f64| (1.0 + x + y).powi(-3)), 5.0, false, true).unwrap();
        let warnings = mislabeled.validate(50, 1).unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn spec_config_parsing() {
        let c = SpecConfig::parse("separable-shifted:3").unwrap();
        assert_eq!(c.family, FamilyName::SeparableShifted);
        assert_eq!(c.build().unwrap().alpha(), 3.0);
        assert!(SpecConfig::parse("nope:2").is_err());
        assert!(SpecConfig::parse("sum_power_shifted").is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"family":"separable_shifted","alpha":3.0}"#);
    }

    #[test]
    fn tail_integral_closed_vs_quadrature() {
        for spec in [sps(3.0), GraphexSpec::separable_shifted(3.0).unwrap()] {
            let c = MarginalEvaluator::new(spec.clone()).mu1_tail_integral(10.0).unwrap();
            let q = MarginalEvaluator::new(spec)
                .with_mode(MarginalMode::Quadrature)
                .mu1_tail_integral(10.0)
                .unwrap();
            assert_relative_eq!(c, q, max_relative = 1e-7);
        }
        assert!(MarginalEvaluator::new(sps(2.0))
            .mu1_tail_integral(1.0)
            .unwrap()
            .is_infinite());
    }
}
