use graphex::cdegree::{count_common, empirical_distribution, fit_tail_index, FitOptions};
use graphex::simulator::simulate;
use graphex::theory::bound_interval;
use graphex::GraphexSpec;
use proptest::prelude::*;

fn power_law(slope: f64, n: u64, noise: &[f64]) -> Vec<(u64, f64)> {
    (1..=n)
        .map(|k| (k, (k as f64).powf(slope) * (1.0 + noise[(k as usize) % noise.len()])))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulated_graphs_are_simple_and_symmetric(seed in any::<u64>(), alpha in 2.1f64..5.0, sep in any::<bool>()) {
        let spec = if sep {
            GraphexSpec::separable_shifted(alpha).unwrap()
        } else {
            GraphexSpec::sum_power_shifted(alpha).unwrap()
        };
        let g = simulate(&spec, 20.0, 0.1, seed).unwrap();
        prop_assert!(g.check_invariants().is_ok());
        for i in 0..g.vertex_count() {
            prop_assert!(g.degree(i) > 0);
            for &j in g.neighbors(i) {
                prop_assert!(j as usize != i);
                prop_assert!(g.neighbors(j as usize).binary_search(&(i as u32)).is_ok());
            }
        }
        let degree_sum: usize = (0..g.vertex_count()).map(|i| g.degree(i)).sum();
        prop_assert_eq!(degree_sum as u64, 2 * g.edge_count());
    }

    #[test]
    fn empirical_distribution_sums_to_one(seed in any::<u64>()) {
        let spec = GraphexSpec::sum_power_shifted(3.0).unwrap();
        let g = simulate(&spec, 60.0, 0.1, seed).unwrap();
        let h = count_common(&g, None).unwrap();
        if h.pairs_positive > 0 {
            let d = empirical_distribution(&h).unwrap();
            let total: f64 = d.iter().map(|p| p.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(d.iter().all(|&(k, p)| k >= 1 && p > 0.0));
        } else {
            prop_assert!(empirical_distribution(&h).is_err());
        }
    }

    #[test]
    fn fit_is_scale_equivariant(
        slope in -4.0f64..-1.0,
        scale in 1e-6f64..1e3,
        noise in prop::collection::vec(-0.05f64..0.05, 1..8),
    ) {
        let d = power_law(slope, 60, &noise);
        let scaled: Vec<(u64, f64)> = d.iter().map(|&(k, p)| (k, p * scale)).collect();
        let opts = FitOptions { r2_target: 0.99, ..FitOptions::default() };
        match (fit_tail_index(&d, opts), fit_tail_index(&scaled, opts)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a.slope - b.slope).abs() < 1e-9);
                prop_assert!((b.intercept - a.intercept - scale.ln()).abs() < 1e-8);
                prop_assert_eq!(a.k_max, b.k_max);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn zero_probabilities_do_not_change_the_fit(
        slope in -4.0f64..-1.0,
        zeros in prop::collection::vec(61u64..500, 0..20),
        noise in prop::collection::vec(-0.05f64..0.05, 1..8),
    ) {
        let d = power_law(slope, 60, &noise);
        let mut padded = d.clone();
        padded.extend(zeros.iter().map(|&k| (k, 0.0)));
        let opts = FitOptions::default();
        prop_assert_eq!(fit_tail_index(&d, opts).ok(), fit_tail_index(&padded, opts).ok());
    }

    #[test]
    fn bound_formulas(alpha in 1.01f64..20.0) {
        let s = bound_interval(alpha, true).unwrap();
        prop_assert!((s.lower - (1.0 + 1.0 / alpha)).abs() < 1e-12);
        prop_assert!((s.upper - (1.5 + 1.0 / alpha).max(1.0 + 2.0 / alpha)).abs() < 1e-12);
        prop_assert!(s.lower < s.upper);
        if alpha > 2.0 {
            let n = bound_interval(alpha, false).unwrap();
            prop_assert!((n.lower - (1.0 + 2.0 / (2.0 * alpha - 1.0))).abs() < 1e-12);
            prop_assert!((n.upper - (1.0 + 4.0 / alpha)).abs() < 1e-12);
            prop_assert!(n.lower < n.upper);
            prop_assert!(n.covers(n.lower) && n.covers(n.upper) && !n.covers(n.upper + 1e-3));
        }
        prop_assert!(s.covers(s.lower) && s.covers(s.upper) && !s.covers(s.lower - 1e-3));
        prop_assert!(bound_interval(alpha, false).is_err() == (alpha <= 2.0));
    }
}
