//! Combination-weight rules: Metropolis, uniform, relative-variance and the
//! online adaptive estimate of the relative-variance weights.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{trace, CVec};
use crate::network::{NetworkModel, Slot, Topology};

/// Left-stochastic Metropolis weights; symmetric, hence doubly stochastic.
pub fn metropolis(topology: &Topology) -> DMatrix<f64> {
    let n = topology.n_nodes();
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut off = 0.0;
        for &l in topology.neighbors(k) {
            if l != k {
                let w = 1.0 / topology.degree(k).max(topology.degree(l)) as f64;
                a[(l, k)] = w;
                off += w;
            }
        }
        a[(k, k)] = 1.0 - off;
    }
    a
}

/// `a_lk = 1/|N_k|` on the neighborhood.
pub fn uniform(topology: &Topology) -> DMatrix<f64> {
    let n = topology.n_nodes();
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        let w = 1.0 / topology.degree(k) as f64;
        for &l in topology.neighbors(k) {
            a[(l, k)] = w;
        }
    }
    a
}

/// Variance products `gamma²_lk` for the slot the weights will be used in.
///
/// Every entry carries the sender's gradient-noise power
/// `mu_l² sigma²_{v,l} Tr(R_{u,l})`. Cross links add the trace of the noise on
/// the quantity that slot actually fuses: intermediate estimates for `A2`,
/// weight estimates for `A1`. Entries outside the neighborhood are zero.
pub fn variance_products(network: &NetworkModel, slot: Slot) -> Result<DMatrix<f64>> {
    if slot == Slot::C {
        return Err(Error::Config(
            "relative-variance weights are defined for A1 or A2 only".into(),
        ));
    }
    let topo = &network.topology;
    let n = topo.n_nodes();
    let own: Vec<f64> = network
        .nodes
        .iter()
        .map(|p| p.mu * p.mu * p.sigma_v2 * trace(&p.r_u).re)
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for k in 0..n {
        for &l in topo.neighbors(k) {
            let link = if l == k {
                0.0
            } else {
                network.link(l, k).map_or(0.0, |noise| match slot {
                    Slot::A2 => trace(&noise.r_psi).re,
                    _ => trace(&noise.r_w).re,
                })
            };
            g[(l, k)] = own[l] + link;
        }
    }
    Ok(g)
}

/// Normalized inverse variances: `a_l = gamma_l^-2 / Σ_m gamma_m^-2`.
///
/// When some `gamma²` vanish the weight is split evenly among those entries,
/// which is the limit of the rule as they shrink to zero together.
pub fn inverse_variance_weights(gamma2: &[f64]) -> Vec<f64> {
    let zeros = gamma2.iter().filter(|&&g| g <= 0.0).count();
    if zeros > 0 {
        let w = 1.0 / zeros as f64;
        return gamma2.iter().map(|&g| if g <= 0.0 { w } else { 0.0 }).collect();
    }
    let inv: Vec<f64> = gamma2.iter().map(|g| g.recip()).collect();
    let total: f64 = inv.iter().sum();
    inv.into_iter().map(|x| x / total).collect()
}

/// Relative-variance matrix from precomputed variance products.
pub fn relative_variance_from(topology: &Topology, gamma2: &DMatrix<f64>) -> DMatrix<f64> {
    let n = topology.n_nodes();
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        let nbrs = topology.neighbors(k);
        let col: Vec<f64> = nbrs.iter().map(|&l| gamma2[(l, k)]).collect();
        for (&l, w) in nbrs.iter().zip(inverse_variance_weights(&col)) {
            a[(l, k)] = w;
        }
    }
    a
}

pub fn relative_variance(network: &NetworkModel, slot: Slot) -> Result<DMatrix<f64>> {
    let g = variance_products(network, slot)?;
    Ok(relative_variance_from(&network.topology, &g))
}

/// Running variance-product estimates held by one node.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveWeightState {
    /// `N_k`, ascending; `gamma2_hat[j]` belongs to `neighbors[j]`.
    pub neighbors: Vec<usize>,
    pub gamma2_hat: Vec<f64>,
    pub nu: f64,
}

impl AdaptiveWeightState {
    /// Starts every estimate at 1, so the first weights are uniform.
    pub fn new(topology: &Topology, k: usize, nu: f64) -> Self {
        let neighbors = topology.neighbors(k).to_vec();
        let gamma2_hat = vec![1.0; neighbors.len()];
        Self { neighbors, gamma2_hat, nu }
    }

    pub fn weights(&self) -> Vec<f64> {
        inverse_variance_weights(&self.gamma2_hat)
    }

    /// Folds in one observation per neighbor, `psi_received[j]` coming from
    /// `neighbors[j]` (the node's own intermediate estimate in its slot), and
    /// returns the new weight column restricted to the neighborhood.
    pub fn update(&mut self, psi_received: &[&CVec], w_prev: &CVec) -> Vec<f64> {
        let dists: Vec<f64> = psi_received.iter().map(|p| (*p - w_prev).norm_squared()).collect();
        self.update_from_distances(&dists)
    }

    /// Same as [`update`](Self::update) with `‖psi_lk − w_prev‖²` precomputed.
    pub fn update_from_distances(&mut self, dists: &[f64]) -> Vec<f64> {
        debug_assert_eq!(dists.len(), self.gamma2_hat.len());
        let nu = self.nu;
        for (g, d) in self.gamma2_hat.iter_mut().zip(dists) {
            *g = (1.0 - nu) * *g + nu * d;
        }
        self.weights()
    }
}

/// Rule selector as written in scenario files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleSpec {
    Metropolis,
    Uniform,
    RelativeVariance,
    Adaptive,
    Identity,
    /// JSON array of rows, entry `[l][k]` is the weight `k` gives to `l`.
    File(PathBuf),
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "metropolis" => Self::Metropolis,
            "uniform" => Self::Uniform,
            "relative_variance" => Self::RelativeVariance,
            "adaptive" => Self::Adaptive,
            "identity" => Self::Identity,
            other => match other.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Self::File(PathBuf::from(p)),
                _ => return Err(Error::Config(format!("unknown combination rule '{other}'"))),
            },
        })
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Metropolis => f.write_str("metropolis"),
            Self::Uniform => f.write_str("uniform"),
            Self::RelativeVariance => f.write_str("relative_variance"),
            Self::Adaptive => f.write_str("adaptive"),
            Self::Identity => f.write_str("identity"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl RuleSpec {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, Self::Adaptive)
    }

    /// Builds the static matrix for `slot`. The adaptive rule has no static
    /// matrix; its initial (uniform) weights are returned. Relative paths in
    /// `File` resolve against `base_dir`.
    pub fn build(&self, network: &NetworkModel, slot: Slot, base_dir: &Path) -> Result<DMatrix<f64>> {
        let topo = &network.topology;
        let n = topo.n_nodes();
        let m = match self {
            Self::Identity => DMatrix::identity(n, n),
            Self::Metropolis => metropolis(topo),
            // rows of C must sum to one, so C takes the transposed form
            Self::Uniform if slot == Slot::C => uniform(topo).transpose(),
            Self::Uniform => uniform(topo),
            Self::RelativeVariance => relative_variance(network, slot)?,
            Self::Adaptive if slot == Slot::C => {
                return Err(Error::Config("the adaptive rule cannot be used for C".into()))
            }
            Self::Adaptive => uniform(topo),
            Self::File(p) => load_matrix(&base_dir.join(p), n)?,
        };
        Ok(m)
    }
}

/// Reads an `n×n` matrix stored as a JSON array of rows.
pub fn load_matrix(path: &Path, n: usize) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!(
            "{}: expected a {n}x{n} matrix",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |l, k| rows[l][k]))
}
