//! First- and second-order moment matrices of the network error recursion.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, c, kron_identity, lambda_max_hermitian, solve, spectral_radius, CMat, CVec};
use crate::network::{CombinationMatrices, LinkNoise, NetworkModel};

/// Mean behavior: `E w̃_i = B E w̃_{i-1} − A2ᵀ M z`.
#[derive(Debug, Clone)]
pub struct MeanDynamics {
    pub n: usize,
    pub m: usize,
    /// Block diagonal `R′` with `R′_k = Σ_l c_lk (R_{u,l} + R^(u)_{v,lk})`.
    pub r_prime: CMat,
    pub b: CMat,
    pub z: CVec,
    /// `diag(mu_k I_M)`.
    pub big_m: CMat,
    /// Lifted `A1ᵀ ⊗ I`, `Cᵀ ⊗ I`, `A2ᵀ ⊗ I`.
    pub a1t: CMat,
    pub ct: CMat,
    pub a2t: CMat,
    pub w_o: CVec,
}

#[derive(Debug, Clone)]
pub struct NoiseMoments {
    pub s: CMat,
    pub t: CMat,
    pub r_z: CMat,
    /// Aggregated weight-exchange noise, blocks `Σ_{l≠k} a1²_lk R^(w)_{v,lk}`.
    pub r_v_w: CMat,
    /// Aggregated estimate-exchange noise, blocks `Σ_{l≠k} a2²_lk R^(ψ)_{v,lk}`.
    pub r_v_psi: CMat,
    pub r_v: CMat,
    pub y: CMat,
    pub g: CVec,
}

fn zero_link(m: usize) -> LinkNoise {
    LinkNoise::zero(m)
}

fn link_or_zero<'a>(network: &'a NetworkModel, l: usize, k: usize, zero: &'a LinkNoise) -> &'a LinkNoise {
    if l == k {
        zero
    } else {
        network.link(l, k).unwrap_or(zero)
    }
}

fn lift_transpose(a: &DMatrix<f64>, m: usize) -> CMat {
    kron_identity(&a.transpose(), m)
}

/// `R′_k` for every node.
pub fn neighborhood_covariances(network: &NetworkModel, mats: &CombinationMatrices) -> Vec<CMat> {
    let m = network.m_dim;
    let zero = zero_link(m);
    (0..network.n_nodes())
        .map(|k| {
            let mut r = CMat::zeros(m, m);
            for &l in network.topology.neighbors(k) {
                let w = mats.c[(l, k)];
                if w != 0.0 {
                    let noise = link_or_zero(network, l, k, &zero);
                    r += (&network.nodes[l].r_u + &noise.r_u) * c(w, 0.0);
                }
            }
            r
        })
        .collect()
}

pub fn assemble_mean_dynamics(
    network: &NetworkModel,
    mats: &CombinationMatrices,
    w_o: &CVec,
) -> Result<MeanDynamics> {
    let (n, m) = (network.n_nodes(), network.m_dim);
    if w_o.len() != m {
        return Err(Error::Dimension(format!("w_o has {} entries, expected {m}", w_o.len())));
    }
    let zero = zero_link(m);
    let r_prime = block_diag(&neighborhood_covariances(network, mats));
    let big_m = CMat::from_diagonal(&CVec::from_fn(n * m, |i, _| c(network.nodes[i / m].mu, 0.0)));

    let mut z = CVec::zeros(n * m);
    for k in 0..n {
        let mut zk = CVec::zeros(m);
        for &l in network.topology.neighbors(k) {
            let w = mats.c[(l, k)];
            let noise = link_or_zero(network, l, k, &zero);
            if w != 0.0 {
                zk -= &noise.r_u * w_o * c(w, 0.0);
            }
        }
        z.rows_mut(k * m, m).copy_from(&zk);
    }

    let a1t = lift_transpose(&mats.a1, m);
    let ct = lift_transpose(&mats.c, m);
    let a2t = lift_transpose(&mats.a2, m);
    let eye = CMat::identity(n * m, n * m);
    let b = &a2t * (&eye - &big_m * &r_prime) * &a1t;
    Ok(MeanDynamics { n, m, r_prime, b, z, big_m, a1t, ct, a2t, w_o: w_o.clone() })
}

/// Steady-state mean error `g` from `(I − B) g = −A2ᵀ M z`.
pub fn bias(md: &MeanDynamics) -> Result<CVec> {
    let rho = spectral_radius(&md.b)?;
    if rho >= 1.0 {
        return Err(Error::MeanUnstable { rho_b: rho });
    }
    bias_unchecked(md)
}

pub(crate) fn bias_unchecked(md: &MeanDynamics) -> Result<CVec> {
    if md.z.iter().all(|x| *x == crate::linalg::ZERO) {
        return Ok(CVec::zeros(md.z.len()));
    }
    let nm = md.n * md.m;
    let rhs = -(&md.a2t * &md.big_m * &md.z);
    let lhs = CMat::identity(nm, nm) - &md.b;
    let g = solve(lhs, &CMat::from_column_slice(nm, 1, rhs.as_slice()))?;
    Ok(CVec::from_column_slice(g.as_slice()))
}

/// Assembles `S`, `T`, `R_z`, `R_v` and `Y` around the given mean dynamics.
pub fn assemble_noise_moments(
    network: &NetworkModel,
    mats: &CombinationMatrices,
    md: &MeanDynamics,
) -> Result<NoiseMoments> {
    let g = bias_unchecked(md)?;
    Ok(noise_moments_with_bias(network, mats, md, g))
}

pub(crate) fn noise_moments_with_bias(
    network: &NetworkModel,
    mats: &CombinationMatrices,
    md: &MeanDynamics,
    g: CVec,
) -> NoiseMoments {
    let (n, m) = (md.n, md.m);
    let zero = zero_link(m);
    let w_o = &md.w_o;

    let s = block_diag(
        &network
            .nodes
            .iter()
            .map(|p| &p.r_u * c(p.sigma_v2, 0.0))
            .collect::<Vec<_>>(),
    );

    let mut t_blocks = Vec::with_capacity(n);
    let mut w_blocks = Vec::with_capacity(n);
    let mut psi_blocks = Vec::with_capacity(n);
    for k in 0..n {
        let (mut t, mut rw, mut rpsi) = (CMat::zeros(m, m), CMat::zeros(m, m), CMat::zeros(m, m));
        for &l in network.topology.neighbors(k) {
            if l == k {
                continue;
            }
            let noise = link_or_zero(network, l, k, &zero);
            let cl = mats.c[(l, k)];
            if cl != 0.0 {
                let wrw = (w_o.adjoint() * &noise.r_u * w_o)[(0, 0)].re;
                let sig_l = network.nodes[l].sigma_v2;
                let term = &noise.r_u * c(sig_l + noise.sigma_d2, 0.0)
                    + &network.nodes[l].r_u * c(noise.sigma_d2 + wrw, 0.0);
                t += term * c(cl * cl, 0.0);
            }
            let a1 = mats.a1[(l, k)];
            rw += &noise.r_w * c(a1 * a1, 0.0);
            let a2 = mats.a2[(l, k)];
            rpsi += &noise.r_psi * c(a2 * a2, 0.0);
        }
        t_blocks.push(t);
        w_blocks.push(rw);
        psi_blocks.push(rpsi);
    }
    let t = block_diag(&t_blocks);
    let r_v_w = block_diag(&w_blocks);
    let r_v_psi = block_diag(&psi_blocks);

    let zz = &md.z * md.z.adjoint();
    let c_lift = md.ct.transpose();
    let r_z = &md.ct * &s * &c_lift + &t + &zz;

    let a2 = md.a2t.transpose();
    let r_v = &md.a2t * &r_v_w * &a2 + &r_v_psi + &md.a2t * &md.big_m * (&t + &zz) * &md.big_m * &a2;
    let y = -(&md.a2t * &md.a1t * &g * md.z.adjoint() * &md.big_m * &a2);
    NoiseMoments { s, t, r_z, r_v_w, r_v_psi, r_v, y, g }
}

/// Driving matrix of the steady-state relation,
/// `A2ᵀ M CᵀSC M A2 + R_v + Y + Y*`.
pub fn numerator(md: &MeanDynamics, nm: &NoiseMoments) -> CMat {
    let a2 = md.a2t.transpose();
    let csc = &md.ct * &nm.s * md.ct.transpose();
    &md.a2t * &md.big_m * csc * &md.big_m * &a2 + &nm.r_v + &nm.y + nm.y.adjoint()
}

/// Same quantity assembled from the no-data-sharing forms (`C = I`):
/// `A2ᵀ M S M A2 + A2ᵀ R^(w)_v A2 + R^(ψ)_v`.
pub fn numerator_without_sharing(md: &MeanDynamics, nm: &NoiseMoments) -> CMat {
    let a2 = md.a2t.transpose();
    &md.a2t * &md.big_m * &nm.s * &md.big_m * &a2 + &md.a2t * &nm.r_v_w * &a2 + &nm.r_v_psi
}

/// Block diagonal `R_u`.
pub fn regressor_covariance(network: &NetworkModel) -> CMat {
    block_diag(&network.nodes.iter().map(|p| p.r_u.clone()).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSizeBound {
    /// 1-based node index.
    pub node: usize,
    pub mu: f64,
    /// `2 / lambda_max(R′_k)`.
    pub tight: f64,
    /// `2 / max_l lambda_max(R_{u,l} + R^(u)_{v,lk})`; only when `C` is
    /// doubly stochastic.
    pub neighborhood: Option<f64>,
    /// `2 / max_l lambda_max(R_{u,l})`, the noise-free counterpart.
    pub noise_free: f64,
    pub within_tight: bool,
}

pub fn step_size_bounds(network: &NetworkModel, mats: &CombinationMatrices) -> Vec<StepSizeBound> {
    let m = network.m_dim;
    let zero = zero_link(m);
    let doubly = mats.c_is_doubly_stochastic(1e-9);
    neighborhood_covariances(network, mats)
        .iter()
        .enumerate()
        .map(|(k, rk)| {
            let nbrs = network.topology.neighbors(k);
            let worst_noisy = nbrs
                .iter()
                .map(|&l| {
                    let noise = link_or_zero(network, l, k, &zero);
                    lambda_max_hermitian(&(&network.nodes[l].r_u + &noise.r_u))
                })
                .fold(0.0, f64::max);
            let worst_clean = nbrs
                .iter()
                .map(|&l| lambda_max_hermitian(&network.nodes[l].r_u))
                .fold(0.0, f64::max);
            let tight = 2.0 / lambda_max_hermitian(rk);
            let mu = network.nodes[k].mu;
            StepSizeBound {
                node: k + 1,
                mu,
                tight,
                neighborhood: doubly.then(|| 2.0 / worst_noisy),
                noise_free: 2.0 / worst_clean,
                within_tight: mu < tight,
            }
        })
        .collect()
}

/// `rho(I − M R′)`: the blocks are Hermitian, so this is `max |1 − mu λ|`.
pub fn spectral_bound(md: &MeanDynamics) -> f64 {
    let nm = md.n * md.m;
    let x = CMat::identity(nm, nm) - &md.big_m * &md.r_prime;
    (0..md.n)
        .map(|k| {
            let blk = crate::linalg::block(&x, k, k, md.m);
            let (vals, _) = crate::linalg::hermitian_eigen(&blk);
            vals.iter().map(|v| v.abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}
