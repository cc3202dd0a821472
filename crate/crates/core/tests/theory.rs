use std::sync::Arc;

use graphex::cdegree::n_t_epsilon;
use graphex::model::{limit_omega, scaling_b, MarginalMode};
use graphex::numerics::{integrate_2d, Tolerance};
use graphex::simulator::simulate;
use graphex::theory::{limit_nk, mu4_condition_scan, MU4_PROBE_BOX};
use graphex::{GraphexSpec, MarginalEvaluator};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

// ∫_0^∞ (x+z)^-3 (y+z)^-3 dz via z = w/(1-w).
fn lambda_oracle(x: f64, y: f64) -> f64 {
    simpson(
        |w| {
            if w >= 1.0 {
                return 0.0;
            }
            let z = w / (1.0 - w);
            (x + z).powi(-3) * (y + z).powi(-3) / (1.0 - w).powi(2)
        },
        0.0,
        1.0,
        1000,
    )
}

#[test]
fn limit_nk_matches_simpson_oracle() {
    let lf = limit_omega(&GraphexSpec::sum_power_shifted(3.0).unwrap()).unwrap();
    let eps = 0.5;
    // u = ε e^s on a square grid, symmetric in (u, v).
    let n = 240;
    let smax = 24.0;
    let h = smax / n as f64;
    let w = |i: usize| {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let us: Vec<f64> = (0..=n).map(|i| eps * (i as f64 * h).exp()).collect();
    for k in [1u64, 2] {
        let mut total = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let l = lambda_oracle(us[i], us[j]);
                let pmf = l.powi(k as i32) * (-l).exp() / (1..=k).product::<u64>() as f64;
                total += w(i) * w(j) * pmf * us[i] * us[j];
            }
        }
        let oracle = total * (h / 3.0).powi(2);
        let got = limit_nk(&lf, eps, k).unwrap().value;
        assert!((got / oracle - 1.0).abs() < 1e-4, "k={k}: {got} vs {oracle}");
    }
}

#[test]
fn limit_nk_partition_identity() {
    // Σ_k N(k) = ∬ (1 − e^{−λ}) over [ε, ∞)².
    let lf = limit_omega(&GraphexSpec::sum_power_shifted(3.0).unwrap()).unwrap();
    // λ ≤ λ(1, 1) = 1/5 on [1, ∞)², so five terms leave a negligible remainder.
    let eps = 1.0;
    let total: f64 = (1..=5).map(|k| limit_nk(&lf, eps, k).unwrap().value).sum();
    let direct = integrate_2d(
        |u, v| -(-lf.lambda(u, v).unwrap()).exp_m1(),
        (eps, eps),
        Tolerance::relative(1e-7),
    );
    assert!(direct.converged);
    assert!((total / direct.value - 1.0).abs() < 1e-5, "{total} vs {}", direct.value);
}

#[test]
fn separable_lambda_is_the_limit_of_scaled_mu2() {
    let alpha = 3.0;
    let spec = GraphexSpec::separable_shifted(alpha).unwrap();
    let lf = limit_omega(&spec).unwrap();
    let ev = MarginalEvaluator::new(spec.clone()).with_mode(MarginalMode::Quadrature);
    let t = 1e40;
    let b = scaling_b(&spec, t).unwrap();
    for &(x, y) in &[(1.0, 1.0), (0.5, 2.0), (0.3, 0.7), (3.0, 5.0)] {
        let scaled = t * ev.mu2(b * x, b * y).unwrap();
        let closed = lf.lambda(x, y).unwrap();
        assert!((scaled / closed - 1.0).abs() < 1e-5, "({x}, {y}): {scaled} vs {closed}");
    }
    // The same U supplied as a custom function gives the same constant.
    let u = Arc::new(move |x: f64| (1.0 + x).powf(-alpha));
    let custom = limit_omega(&GraphexSpec::custom_separable(u, alpha, true).unwrap()).unwrap();
    let c = custom.separable_constant().unwrap();
    assert!((c - 1.0 / (2.0 * alpha - 1.0)).abs() < 1e-8, "{c}");
    assert!((custom.lambda(0.5, 2.0).unwrap() / lf.lambda(0.5, 2.0).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn mu4_scan_is_stable_in_probe_count() {
    let ev = MarginalEvaluator::new(GraphexSpec::sum_power_shifted(3.0).unwrap());
    let a = mu4_condition_scan(&ev, 0.75, 10_000, MU4_PROBE_BOX, 1).unwrap();
    let b = mu4_condition_scan(&ev, 0.75, 20_000, MU4_PROBE_BOX, 1).unwrap();
    assert!(b.sup_ratio >= a.sup_ratio);
    assert!(b.sup_ratio / a.sup_ratio < 1.25, "{} vs {}", a.sup_ratio, b.sup_ratio);
    let again = mu4_condition_scan(&ev, 0.75, 10_000, MU4_PROBE_BOX, 1).unwrap();
    assert_eq!(a, again);
}

#[test]
fn restricted_counts_shrink_with_epsilon() {
    let spec = GraphexSpec::sum_power_shifted(3.0).unwrap();
    let g = simulate(&spec, 300.0, 0.1, 4).unwrap();
    for k in [1u64, 2, 3] {
        let counts: Vec<u64> = [0.1, 0.3, 1.0, 3.0]
            .iter()
            .map(|&e| n_t_epsilon(&g, &spec, e, k).unwrap())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]), "k={k}: {counts:?}");
    }
}
