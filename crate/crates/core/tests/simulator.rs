use graphex::cdegree::count_common;
use graphex::numerics::{chi_square_homogeneity, dispersion_index, mean_and_se, poisson_gof};
use graphex::simulator::{
    sample_graph_blocked, sample_graph_naive, sample_planted_pairs, sample_points, simulate, SparseGraph, Vertex,
};
use graphex::{GraphexSpec, MarginalEvaluator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn blocked_and_naive_edge_counts_agree() {
    let spec = GraphexSpec::sum_power_shifted(3.0).unwrap();
    let (t, eta_max) = (30.0, 20.0);
    let (naive, blocked): (Vec<u64>, Vec<u64>) = (0..2000u64)
        .map(|s| {
            let pts = sample_points(t, eta_max, s).unwrap();
            let a = sample_graph_naive(&spec, &pts, s ^ 0xa5a5).unwrap().edge_count();
            let b = sample_graph_blocked(&spec, &pts, s ^ 0x5a5a).unwrap().edge_count();
            (a, b)
        })
        .unzip();
    let r = chi_square_homogeneity(&naive, &blocked, 30).unwrap();
    assert!(r.p_value > 0.01, "{r:?}");
}

#[test]
fn mean_edge_count_matches_double_integral() {
    // t²/2 · ∬(1+x+y)^-3 = t²/4.
    let spec = GraphexSpec::sum_power_shifted(3.0).unwrap();
    let counts: Vec<f64> = (0..200u64)
        .map(|s| simulate(&spec, 100.0, 0.1, s).unwrap().edge_count() as f64)
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 2500.0).abs() < 4.0 * se, "{mean} ± {se}");
}

#[test]
fn point_counts_are_poisson() {
    let counts: Vec<f64> = (0..1000u64)
        .map(|s| sample_points(5.0, 10.0, s).unwrap().len() as f64)
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 50.0).abs() < 3.0 * se, "{mean}");
    let d = dispersion_index(&counts).unwrap();
    assert!((0.85..1.15).contains(&d), "{d}");
}

fn brute_force(g: &SparseGraph) -> std::collections::BTreeMap<u64, u64> {
    let n = g.vertex_count();
    let mut out = std::collections::BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = g.neighbors(i).iter().filter(|z| g.neighbors(j).contains(z)).count() as u64;
            if c > 0 {
                *out.entry(c).or_insert(0) += 1;
            }
        }
    }
    out
}

#[test]
fn wedge_counts_equal_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let n = rng.random_range(2..=20u32);
        let p: f64 = rng.random();
        let vertices = (0..n)
            .map(|i| Vertex {
                id: i as u64,
                theta: 0.0,
                eta: rng.random::<f64>(),
            })
            .collect();
        let edges: Vec<(u32, u32)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        let g = SparseGraph::from_edges(vertices, &edges).unwrap();
        assert_eq!(count_common(&g, None).unwrap().counts, brute_force(&g));
    }
}

#[test]
fn planted_pairs_follow_poisson_law() {
    let spec = GraphexSpec::sum_power_shifted(3.0).unwrap();
    let ev = MarginalEvaluator::new(spec.clone());
    for &(x, y) in &[(0.5, 1.5), (1.0, 1.0 + 1e-9), (0.1, 4.0)] {
        for &t in &[50.0, 100.0] {
            let rate = t * ev.mu2(x, y).unwrap();
            let draws = sample_planted_pairs(&spec, t, 1e6, x, y, 9, 20_000).unwrap();
            let r = poisson_gof(&draws, rate).unwrap();
            assert!(r.p_value > 0.001, "({x}, {y}, {t}): {r:?}");
        }
    }
}
