mod common;

use diffnet::linalg::c;
use diffnet::linalg::CVec;
use diffnet::network::{random_network, stochastic_residuals, validate, CombinationMatrices, ProfileRanges, Slot, Topology};
use diffnet::rules::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Minimizes `Σ a_l² g_l` over the simplex by projected gradient.
fn qp_oracle(g: &[f64]) -> Vec<f64> {
    let scale = g.iter().cloned().fold(0.0, f64::max);
    let g: Vec<f64> = g.iter().map(|x| x / scale).collect();
    let step = 0.5;
    let mut a = vec![1.0 / g.len() as f64; g.len()];
    for _ in 0..2_000_000 {
        let trial: Vec<f64> = a.iter().zip(&g).map(|(x, gi)| x - step * 2.0 * gi * x).collect();
        let next = project_simplex(&trial);
        let delta = next.iter().zip(&a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        a = next;
        if delta < 1e-17 {
            break;
        }
    }
    a
}

fn objective(a: &[f64], g: &[f64]) -> f64 {
    a.iter().zip(g).map(|(x, y)| x * x * y).sum()
}

#[test]
fn relative_variance_solves_the_column_qp() {
    for seed in 0..50 {
        let net = random_network(seed, 5, 2, 0.6, &ProfileRanges::default()).unwrap();
        for slot in [Slot::A1, Slot::A2] {
            let gamma = variance_products(&net, slot).unwrap();
            let a = relative_variance(&net, slot).unwrap();
            for k in 0..5 {
                let nbrs = net.topology.neighbors(k);
                let g: Vec<f64> = nbrs.iter().map(|&l| gamma[(l, k)]).collect();
                let ours: Vec<f64> = nbrs.iter().map(|&l| a[(l, k)]).collect();
                let oracle = qp_oracle(&g);
                let (fo, fq) = (objective(&ours, &g), objective(&oracle, &g));
                assert!(fo <= fq * (1.0 + 1e-10), "seed {seed} node {k}: {fo} > {fq}");
                for (x, y) in ours.iter().zip(&oracle) {
                    assert!((x - y).abs() < 1e-8, "seed {seed} node {k}: {ours:?} vs {oracle:?}");
                }
            }
        }
    }
}

#[test]
fn variance_product_example() {
    let topo = Topology::complete(2);
    let a = relative_variance_from(&topo, &nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]));
    assert_eq!(a[(0, 0)], 0.75);
    assert_eq!(a[(1, 0)], 0.25);
}

#[test]
fn relative_variance_rejects_c_slot() {
    let net = random_network(1, 5, 2, 0.6, &ProfileRanges::default()).unwrap();
    assert!(relative_variance(&net, Slot::C).is_err());
    assert!(RuleSpec::Adaptive.build(&net, Slot::C, std::path::Path::new(".")).is_err());
}

#[test]
fn every_rule_validates() {
    for seed in 0..20 {
        let net = random_network(seed, 12, 2, 0.45, &ProfileRanges::default()).unwrap();
        for rule in [RuleSpec::Metropolis, RuleSpec::Uniform, RuleSpec::RelativeVariance] {
            let a = rule.build(&net, Slot::A2, std::path::Path::new(".")).unwrap();
            let [col, _] = stochastic_residuals(&a);
            assert!(col <= 1e-12);
            let mut mats = CombinationMatrices::atc(a.clone());
            assert!(validate(&net, &mats).is_ok());
            mats = CombinationMatrices::cta(a);
            assert!(validate(&net, &mats).is_ok());
        }
        let c_mat = RuleSpec::Metropolis.build(&net, Slot::C, std::path::Path::new(".")).unwrap();
        assert!(stochastic_residuals(&c_mat)[1] <= 1e-12);
    }
}

#[test]
fn matrix_file_rule() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.json"), "[[0.5, 0.5], [0.5, 0.5]]").unwrap();
    let net = common::two_node_regressor_noise(0.01);
    let a = "file:a.json".parse::<RuleSpec>().unwrap().build(&net, Slot::A2, dir.path()).unwrap();
    assert_eq!(a[(1, 0)], 0.5);
    std::fs::write(dir.path().join("b.json"), "[[1.0]]").unwrap();
    assert!("file:b.json".parse::<RuleSpec>().unwrap().build(&net, Slot::A2, dir.path()).is_err());
}

#[test]
fn adaptive_weights_converge_to_relative_variance() {
    let topo = Topology::complete(2);
    let mut state = AdaptiveWeightState::new(&topo, 0, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = [1.0, 3.0];
    let w = CVec::zeros(2);
    let (mut sum, mut count) = ([0.0; 2], 0);
    for i in 0..5000 {
        // ψ − w with covariance (γ²/2) I in each of two complex entries
        let draws: Vec<CVec> = truth
            .iter()
            .map(|g: &f64| {
                CVec::from_fn(2, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    c(re, im) * (g / 4.0).sqrt()
                })
            })
            .collect();
        let refs: Vec<&CVec> = draws.iter().collect();
        let a = state.update(&refs, &w);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(state.gamma2_hat.iter().all(|&g| g > 0.0));
        if i >= 500 {
            sum[0] += a[0];
            sum[1] += a[1];
            count += 1;
        }
    }
    let avg = [sum[0] / count as f64, sum[1] / count as f64];
    assert!((avg[0] - 0.75).abs() < 0.05 && (avg[1] - 0.25).abs() < 0.05, "{avg:?}");
}

proptest! {
    #[test]
    fn column_scale_invariance(g in proptest::collection::vec(1e-6f64..10.0, 1..8), s in 1e-3f64..1e3) {
        let a = inverse_variance_weights(&g);
        let scaled: Vec<f64> = g.iter().map(|x| x * s).collect();
        let b = inverse_variance_weights(&scaled);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_variances_give_uniform(n in 1usize..10, g in 1e-6f64..10.0) {
        let a = inverse_variance_weights(&vec![g; n]);
        for x in a {
            prop_assert!((x - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn adaptive_columns_stay_stochastic(dists in proptest::collection::vec(0.0f64..5.0, 4), nu in 0.0f64..1.0) {
        let mut state = AdaptiveWeightState::new(&Topology::complete(4), 2, nu);
        let a = state.update_from_distances(&dists);
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(a.iter().all(|&x| x >= 0.0));
    }
}
