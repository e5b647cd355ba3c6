#![allow(dead_code)]

use std::collections::BTreeMap;

use diffnet::linalg::{c, CMat, CVec, C64};
use diffnet::sim::IterationData;
use diffnet::network::{
    link_index, random_network, CombinationMatrices, LinkNoise, NetworkModel, NodeProfile, ProfileRanges, Topology,
    WeightTrajectory,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn eye(m: usize) -> CMat {
    CMat::identity(m, m)
}

pub fn scaled(m: usize, s: f64) -> CMat {
    eye(m) * c(s, 0.0)
}

pub fn single_node(mu: f64, sigma_u2: f64, sigma_v2: f64) -> NetworkModel {
    NetworkModel {
        topology: Topology::complete(1),
        m_dim: 1,
        nodes: vec![NodeProfile { mu, sigma_v2, r_u: scaled(1, sigma_u2) }],
        links: BTreeMap::new(),
        trajectory: WeightTrajectory::Constant { w0: CVec::from_element(1, c(1.0, 0.0)) },
    }
}

/// Two connected nodes, `R_u = 1`, regressor noise 0.2 on link 2 → 1.
pub fn two_node_regressor_noise(mu: f64) -> NetworkModel {
    let mut links = BTreeMap::new();
    links.insert((1, 0), LinkNoise { r_u: scaled(1, 0.2), ..LinkNoise::zero(1) });
    NetworkModel {
        topology: Topology::complete(2),
        m_dim: 1,
        nodes: vec![NodeProfile { mu, sigma_v2: 0.1, r_u: eye(1) }; 2],
        links,
        trajectory: WeightTrajectory::Constant { w0: CVec::from_element(1, c(1.0, 0.0)) },
    }
}

/// Three fully connected nodes, `M = 2`, every link noise source active.
pub fn three_node(mu: f64, regressor_noise: f64) -> NetworkModel {
    let topology = Topology::complete(3);
    let mut links = BTreeMap::new();
    for (j, (l, k)) in diffnet::network::link_index(&topology).into_iter().enumerate() {
        let s = 1.0 + 0.25 * j as f64;
        links.insert(
            (l, k),
            LinkNoise {
                r_w: scaled(2, 1e-4 * s),
                sigma_d2: 1e-3 * s,
                r_u: scaled(2, regressor_noise * s),
                r_psi: scaled(2, 2e-4 * s),
            },
        );
    }
    let nodes = (0..3)
        .map(|k| NodeProfile {
            mu,
            sigma_v2: 0.01 * (k + 1) as f64,
            r_u: CMat::from_row_slice(2, 2, &[c(1.0 + 0.2 * k as f64, 0.0), c(0.1, 0.05), c(0.1, -0.05), c(0.9, 0.0)]),
        })
        .collect();
    NetworkModel {
        topology,
        m_dim: 2,
        nodes,
        links,
        trajectory: WeightTrajectory::Constant { w0: CVec::from_vec(vec![c(0.5, -0.3), c(-0.2, 0.8)]) },
    }
}

/// Random left-stochastic matrix supported on the graph (self weight > 0).
pub fn random_left_stochastic(topo: &Topology, rng: &mut impl Rng) -> DMatrix<f64> {
    let n = topo.n_nodes();
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        for &l in topo.neighbors(k) {
            a[(l, k)] = rng.random_range(0.05..1.0);
        }
        let s: f64 = a.column(k).sum();
        a.column_mut(k).scale_mut(1.0 / s);
    }
    a
}

pub fn random_instance(seed: u64, n: usize, m: usize) -> NetworkModel {
    let mut net = random_network(seed, n, m, 0.5, &ProfileRanges::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    for p in &mut net.nodes {
        p.mu = rng.random_range(0.005..0.05);
    }
    net
}

/// Random `A1`, `A2` on the graph, `C = I`.
pub fn random_matrices_no_sharing(net: &NetworkModel, seed: u64) -> CombinationMatrices {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = net.n_nodes();
    CombinationMatrices {
        a1: random_left_stochastic(&net.topology, &mut rng),
        c: DMatrix::identity(n, n),
        a2: random_left_stochastic(&net.topology, &mut rng),
    }
}

pub fn random_matrices(net: &NetworkModel, seed: u64) -> CombinationMatrices {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CombinationMatrices {
        a1: random_left_stochastic(&net.topology, &mut rng),
        c: random_left_stochastic(&net.topology, &mut rng).transpose(),
        a2: random_left_stochastic(&net.topology, &mut rng),
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
pub fn w_true(net: &NetworkModel) -> Vec<C64> {
    net.w0().iter().copied().collect()
}

/// Stacked `w̃ = 1 ⊗ w° − w`.
pub fn error_vector(w: &[C64], truth: &[C64]) -> CVec {
    let m = truth.len();
    CVec::from_iterator(w.len(), w.iter().enumerate().map(|(i, x)| truth[i % m] - x))
}

/// Right-hand side of the error recursion, built from the recorded draws
/// with dense matrices and no reference to the step code.
pub fn recursion_rhs(net: &NetworkModel, mats: &CombinationMatrices, prev: &CVec, data: &IterationData) -> CVec {
    let (n, m) = (net.n_nodes(), net.m_dim);
    let links = link_index(&net.topology);
    let link_of = |l: usize, k: usize| links.iter().position(|&p| p == (l, k));
    let w_o = net.w0();
    let row = |v: &[C64]| CMat::from_row_slice(1, m, v);
    let seg = |v: &[C64], j: usize| CVec::from_column_slice(&v[j * m..(j + 1) * m]);

    let mut r_prime = CMat::zeros(n * m, n * m);
    let mut z = CVec::zeros(n * m);
    let mut v_w = CVec::zeros(n * m);
    let mut v_psi = CVec::zeros(n * m);
    for k in 0..n {
        let mut rk = CMat::zeros(m, m);
        let mut zk = CVec::zeros(m);
        for &l in net.topology.neighbors(k) {
            let j = link_of(l, k);
            let (u_lk, vd, vu) = match j {
                Some(j) => {
                    let u = row(data.u(l)) + row(&data.link_u[j * m..(j + 1) * m]);
                    (u, data.link_d[j], row(&data.link_u[j * m..(j + 1) * m]))
                }
                None => (row(data.u(l)), c(0.0, 0.0), CMat::zeros(1, m)),
            };
            let cl = c(mats.c[(l, k)], 0.0);
            rk += u_lk.adjoint() * &u_lk * cl;
            let scalar = data.v[l] + vd - (&vu * w_o)[(0, 0)];
            zk += u_lk.adjoint().column(0) * scalar * cl;
            if let Some(j) = j {
                v_w.rows_mut(k * m, m).axpy(c(mats.a1[(l, k)], 0.0), &seg(&data.link_w, j), c(1.0, 0.0));
                v_psi.rows_mut(k * m, m).axpy(c(mats.a2[(l, k)], 0.0), &seg(&data.link_psi, j), c(1.0, 0.0));
            }
        }
        r_prime.view_mut((k * m, k * m), (m, m)).copy_from(&rk);
        z.rows_mut(k * m, m).copy_from(&zk);
    }
    let lift = |a: &DMatrix<f64>| diffnet::linalg::kron_identity(&a.transpose(), m);
    let (a1t, a2t) = (lift(&mats.a1), lift(&mats.a2));
    let big_m = CMat::from_diagonal(&CVec::from_fn(n * m, |i, _| c(net.nodes[i / m].mu, 0.0)));
    let inner = CMat::identity(n * m, n * m) - &big_m * &r_prime;
    &a2t * &inner * &a1t * prev - &a2t * &inner * v_w - &a2t * &big_m * z - v_psi
}

