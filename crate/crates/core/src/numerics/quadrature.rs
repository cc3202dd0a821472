//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite and
//! semi-infinite intervals, plus iterated two-dimensional integration.
//!
//! Semi-infinite ranges `[lower, ∞)` are split into decade segments
//! `lower + [10^k, 10^(k+1)]` so that power-law integrands whose mass sits at
//! very different scales are always sampled, and the last segment is mapped
//! onto `(0, 1)` with `z = a + s·u/(1−u)`. All segments then compete in a
//! single priority queue ordered by error estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Error target: converged when `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    /// Purely relative target; the right choice for integrals whose size is
    /// not known in advance (scaled marginals can be 1e-20 or smaller).
    pub const fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }

    /// Same target scaled down by `factor` (used for inner integrals).
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            abs: self.abs / factor,
            rel: self.rel / factor,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::relative(1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Limit on the number of live segments before giving up.
pub const DEFAULT_MAX_SEGMENTS: usize = 5000;

// Kronrod abscissae and weights (15 point), Gauss weights (7 point) on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel on `[a, b]`; returns `(value, error)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        // Gauss nodes are the odd Kronrod indices.
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let result = res_k * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Finite {
        a: f64,
        b: f64,
    },
    /// `[a, ∞)` through `z = a + scale·u/(1−u)`, `u ∈ (0, 1)`.
    Tail {
        a: f64,
        scale: f64,
    },
}

impl Segment {
    fn evaluate<F: Fn(f64) -> f64>(&self, f: &F) -> (f64, f64) {
        match *self {
            Segment::Finite { a, b } => gk15(f, a, b),
            Segment::Tail { a, scale } => {
                let g = |u: f64| {
                    let w = 1.0 - u;
                    let z = a + scale * u / w;
                    if !z.is_finite() {
                        return 0.0;
                    }
                    let v = f(z);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * scale / (w * w)
                    }
                };
                gk15(&g, 0.0, 1.0)
            }
        }
    }

    fn split(&self) -> Option<(Segment, Segment)> {
        match *self {
            Segment::Finite { a, b } => {
                let m = 0.5 * (a + b);
                if !(m > a && m < b) || (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
                    None
                } else {
                    Some((Segment::Finite { a, b: m }, Segment::Finite { a: m, b }))
                }
            }
            Segment::Tail { a, scale } => {
                let m = a + scale;
                if !m.is_finite() || m == a {
                    None
                } else {
                    Some((
                        Segment::Finite { a, b: m },
                        Segment::Tail {
                            a: m,
                            scale: 2.0 * scale.max(m.abs() * 0.5),
                        },
                    ))
                }
            }
        }
    }
}

struct Entry {
    seg: Segment,
    value: f64,
    error: f64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, initial: &[Segment], tol: Tolerance, max_segments: usize) -> QuadratureResult {
    let mut heap = BinaryHeap::with_capacity(initial.len() * 4);
    let mut finished: Vec<Entry> = Vec::new();
    let mut evaluations = 0usize;
    let mut total_value = 0.0;
    let mut total_error = 0.0;

    for seg in initial {
        let (value, error) = seg.evaluate(f);
        evaluations += 15;
        total_value += value;
        total_error += error;
        heap.push(Entry {
            seg: *seg,
            value,
            error,
        });
    }

    let mut converged = total_error <= tol.target(total_value);
    while !converged {
        if heap.len() + finished.len() >= max_segments {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        match worst.seg.split() {
            Some((left, right)) => {
                let (v1, e1) = left.evaluate(f);
                let (v2, e2) = right.evaluate(f);
                evaluations += 30;
                total_value += v1 + v2 - worst.value;
                total_error += e1 + e2 - worst.error;
                heap.push(Entry {
                    seg: left,
                    value: v1,
                    error: e1,
                });
                heap.push(Entry {
                    seg: right,
                    value: v2,
                    error: e2,
                });
            }
            None => finished.push(worst),
        }
        converged = total_error <= tol.target(total_value);
    }

    // Re-sum to shed drift from the running updates.
    let (value, error) = heap
        .iter()
        .chain(finished.iter())
        .fold((0.0, 0.0), |(v, e), entry| (v + entry.value, e + entry.error));
    let converged = converged || error <= tol.target(value);
    QuadratureResult {
        value,
        error_estimate: error,
        evaluations,
        converged,
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadratureResult {
    if a == b {
        return QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut res = adaptive(&f, &[Segment::Finite { a: lo, b: hi }], tol, DEFAULT_MAX_SEGMENTS);
    res.value *= sign;
    res
}

const DECADE_LO: i32 = -4;
const DECADE_HI: i32 = 12;

fn semi_infinite_segments(lower: f64) -> Vec<Segment> {
    let mut segs = Vec::with_capacity((DECADE_HI - DECADE_LO + 3) as usize);
    let mut prev = lower;
    for k in DECADE_LO..=DECADE_HI {
        let next = lower + 10f64.powi(k);
        if next > prev {
            segs.push(Segment::Finite { a: prev, b: next });
            prev = next;
        }
    }
    segs.push(Segment::Tail {
        a: prev,
        scale: 10f64.powi(DECADE_HI).max(prev.abs()),
    });
    segs
}

/// Integrates `f` over `[lower, ∞)`.
///
/// `converged` is reported honestly; on failure the best estimate is still
/// returned and callers decide how severe that is.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, lower: f64, tol: Tolerance) -> QuadratureResult {
    integrate_semi_infinite_with(f, lower, tol, DEFAULT_MAX_SEGMENTS)
}

pub fn integrate_semi_infinite_with<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    tol: Tolerance,
    max_segments: usize,
) -> QuadratureResult {
    adaptive(&f, &semi_infinite_segments(lower), tol, max_segments)
}

/// Iterated integral of `f(x, y)` over `[lower.0, ∞) × [lower.1, ∞)`.
///
/// Inner integrals run at a tenth of the requested tolerance. The reported
/// error adds the outer estimate to the worst inner relative error applied to
/// the total.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, lower: (f64, f64), tol: Tolerance) -> QuadratureResult {
    use std::cell::Cell;

    let inner_tol = tol.tightened(10.0);
    let inner_rel_err = Cell::new(0.0f64);
    let inner_abs_err = Cell::new(0.0f64);
    let inner_ok = Cell::new(true);
    let inner_evals = Cell::new(0usize);

    let outer = integrate_semi_infinite(
        |x| {
            let r = integrate_semi_infinite(|y| f(x, y), lower.1, inner_tol);
            inner_evals.set(inner_evals.get() + r.evaluations);
            if !r.converged {
                inner_ok.set(false);
            }
            if r.value != 0.0 {
                inner_rel_err.set(inner_rel_err.get().max(r.error_estimate / r.value.abs()));
            } else {
                inner_abs_err.set(inner_abs_err.get().max(r.error_estimate));
            }
            r.value
        },
        lower.0,
        tol,
    );

    let error = outer.error_estimate + inner_rel_err.get() * outer.value.abs();
    QuadratureResult {
        value: outer.value,
        error_estimate: error,
        evaluations: outer.evaluations + inner_evals.get(),
        converged: outer.converged && inner_ok.get() && error <= tol.target(outer.value) * 1.1 + inner_abs_err.get(),
    }
}
