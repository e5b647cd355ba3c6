//! Network description: topology, per-node data statistics, per-link exchange
//! noise statistics, the true-weight trajectory and the combination matrices.
//!
//! Indices are 0-based here; every external format is 1-based.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_residual, is_psd, is_zero, trace, CMat, CVec, C64};

const HERMITIAN_TOL: f64 = 1e-10;
const STOCHASTIC_TOL: f64 = 1e-9;
const MAX_CONNECT_ATTEMPTS: usize = 1000;

/// Undirected graph whose neighborhoods always contain the node itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    adjacency: Vec<Vec<bool>>,
    neighborhoods: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from undirected cross links (0-based). Self-pairs are
    /// ignored; the self-loop is always implied.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidNetwork("network needs at least one node".into()));
        }
        let mut adjacency = vec![vec![false; n_nodes]; n_nodes];
        for (k, row) in adjacency.iter_mut().enumerate() {
            row[k] = true;
        }
        for &(l, k) in edges {
            if l >= n_nodes || k >= n_nodes {
                return Err(Error::InvalidNetwork(format!(
                    "edge [{}, {}] references a node outside 1..={n_nodes}",
                    l + 1,
                    k + 1
                )));
            }
            adjacency[l][k] = true;
            adjacency[k][l] = true;
        }
        let neighborhoods = (0..n_nodes)
            .map(|k| (0..n_nodes).filter(|&l| adjacency[l][k]).collect())
            .collect();
        Ok(Self { adjacency, neighborhoods })
    }

    pub fn complete(n_nodes: usize) -> Self {
        let edges: Vec<_> = (0..n_nodes)
            .flat_map(|l| (l + 1..n_nodes).map(move |k| (l, k)))
            .collect();
        Self::from_edges(n_nodes, &edges).expect("complete graph is well formed")
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// `N_k`, ascending, including `k`.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighborhoods[k]
    }

    /// `|N_k|`, counting the node itself.
    pub fn degree(&self, k: usize) -> usize {
        self.neighborhoods[k].len()
    }

    pub fn is_neighbor(&self, l: usize, k: usize) -> bool {
        self.adjacency[l][k]
    }

    /// Cross links as undirected pairs `(l, k)` with `l < k`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n_nodes();
        (0..n)
            .flat_map(|l| (l + 1..n).map(move |k| (l, k)))
            .filter(|&(l, k)| self.adjacency[l][k])
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(k) = queue.pop_front() {
            for &l in &self.neighborhoods[k] {
                if !seen[l] {
                    seen[l] = true;
                    queue.push_back(l);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn is_symmetric(&self) -> bool {
        let n = self.n_nodes();
        (0..n).all(|l| (0..n).all(|k| self.adjacency[l][k] == self.adjacency[k][l]))
    }
}

/// Ordered list of directed cross links `(l, k)`: for each receiving node `k`
/// in ascending order, its in-neighbors `l ≠ k` in ascending order.
pub fn link_index(topology: &Topology) -> Vec<(usize, usize)> {
    (0..topology.n_nodes())
        .flat_map(|k| {
            topology
                .neighbors(k)
                .iter()
                .filter(move |&&l| l != k)
                .map(move |&l| (l, k))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeProfile {
    pub mu: f64,
    pub sigma_v2: f64,
    pub r_u: CMat,
}

/// Second-order statistics of the four additive noises on link `l → k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkNoise {
    /// Noise on exchanged weight estimates.
    pub r_w: CMat,
    /// Noise variance on exchanged measurements.
    pub sigma_d2: f64,
    /// Noise on exchanged regressors.
    pub r_u: CMat,
    /// Noise on exchanged intermediate estimates.
    pub r_psi: CMat,
}

impl LinkNoise {
    pub fn zero(m: usize) -> Self {
        Self {
            r_w: CMat::zeros(m, m),
            sigma_d2: 0.0,
            r_u: CMat::zeros(m, m),
            r_psi: CMat::zeros(m, m),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_d2 == 0.0 && is_zero(&self.r_w) && is_zero(&self.r_u) && is_zero(&self.r_psi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightTrajectory {
    Constant { w0: CVec },
    /// `w_i = w_{i-1} + eta_i`, `E eta eta* = r_eta`.
    RandomWalk { w0: CVec, r_eta: CMat },
    /// `w_i = e^{j omega} w_{i-1}` entrywise.
    Rotation { w0: CVec, omega: f64 },
}

impl WeightTrajectory {
    pub fn w0(&self) -> &CVec {
        match self {
            Self::Constant { w0 } | Self::RandomWalk { w0, .. } | Self::Rotation { w0, .. } => w0,
        }
    }

    pub fn mode(&self) -> TrajectoryMode {
        match self {
            Self::Constant { .. } => TrajectoryMode::Stationary,
            Self::RandomWalk { .. } => TrajectoryMode::RandomWalk,
            Self::Rotation { .. } => TrajectoryMode::Rotation,
        }
    }

    pub fn r_eta(&self) -> Option<&CMat> {
        match self {
            Self::RandomWalk { r_eta, .. } => Some(r_eta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    #[serde(alias = "constant")]
    Stationary,
    RandomWalk,
    Rotation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub topology: Topology,
    pub m_dim: usize,
    pub nodes: Vec<NodeProfile>,
    /// Keyed by directed link `(from, to)`; absent entries are zero.
    pub links: BTreeMap<(usize, usize), LinkNoise>,
    pub trajectory: WeightTrajectory,
}

impl NetworkModel {
    pub fn n_nodes(&self) -> usize {
        self.topology.n_nodes()
    }

    pub fn link(&self, l: usize, k: usize) -> Option<&LinkNoise> {
        self.links.get(&(l, k))
    }

    pub fn w0(&self) -> &CVec {
        self.trajectory.w0()
    }

    /// True when no link carries any exchange noise.
    pub fn is_noise_free_exchange(&self) -> bool {
        self.links.values().all(LinkNoise::is_zero)
    }
}

/// Which exchanged quantity a combination matrix fuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    A1,
    C,
    A2,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::A1 => "A1",
            Slot::C => "C",
            Slot::A2 => "A2",
        })
    }
}

/// `a1[(l, k)]`, `c[(l, k)]`, `a2[(l, k)]`: weight node `k` assigns to data from `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrices {
    pub a1: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub a2: DMatrix<f64>,
}

impl CombinationMatrices {
    pub fn identity(n: usize) -> Self {
        Self {
            a1: DMatrix::identity(n, n),
            c: DMatrix::identity(n, n),
            a2: DMatrix::identity(n, n),
        }
    }

    /// Adapt-then-combine: `A1 = C = I`, `A2 = a`.
    pub fn atc(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        Self { a2: a, ..Self::identity(n) }
    }

    /// Combine-then-adapt: `A2 = C = I`, `A1 = a`.
    pub fn cta(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        Self { a1: a, ..Self::identity(n) }
    }

    pub fn get(&self, slot: Slot) -> &DMatrix<f64> {
        match slot {
            Slot::A1 => &self.a1,
            Slot::C => &self.c,
            Slot::A2 => &self.a2,
        }
    }

    pub fn c_is_identity(&self) -> bool {
        let n = self.c.nrows();
        self.c == DMatrix::identity(n, n)
    }

    pub fn c_is_doubly_stochastic(&self, tol: f64) -> bool {
        stochastic_residuals(&self.c).into_iter().all(|r| r <= tol)
    }
}

/// `(‖Mᵀ1 − 1‖_∞, ‖M1 − 1‖_∞)`: column-sum and row-sum residuals.
pub fn stochastic_residuals(m: &DMatrix<f64>) -> [f64; 2] {
    let col = m
        .column_iter()
        .map(|col| (col.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let row = m
        .row_iter()
        .map(|row| (row.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    [col, row]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, msg: String) {
        self.violations.push(Violation(msg));
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let joined: Vec<_> = self.violations.iter().map(|v| v.0.as_str()).collect();
            Err(Error::InvalidNetwork(joined.join("; ")))
        }
    }
}

fn check_psd_matrix(report: &mut ValidationReport, m: &CMat, dim: usize, what: &str) {
    if m.shape() != (dim, dim) {
        report.push(format!("{what} must be {dim}x{dim}, got {}x{}", m.nrows(), m.ncols()));
        return;
    }
    if hermitian_residual(m) > HERMITIAN_TOL {
        report.push(format!("{what} is not Hermitian"));
    } else if !is_psd(m) {
        report.push(format!("{what} is not positive semi-definite"));
    }
}

/// Checks the statistical model alone (topology, node and link statistics).
pub fn validate_model(network: &NetworkModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let topo = &network.topology;
    let n = topo.n_nodes();
    let m = network.m_dim;
    if m == 0 {
        report.push("m_dim must be positive".into());
        return report;
    }
    if !topo.is_symmetric() {
        report.push("adjacency is not symmetric".into());
    }
    if !topo.is_connected() {
        report.push("graph is not connected".into());
    }
    if network.nodes.len() != n {
        report.push(format!("expected {n} node profiles, got {}", network.nodes.len()));
    }
    for (k, node) in network.nodes.iter().enumerate() {
        let id = k + 1;
        if !(node.mu > 0.0 && node.mu.is_finite()) {
            report.push(format!("node {id}: step-size must be positive, got {}", node.mu));
        }
        if !(node.sigma_v2 >= 0.0 && node.sigma_v2.is_finite()) {
            report.push(format!("node {id}: measurement-noise variance must be nonnegative"));
        }
        check_psd_matrix(&mut report, &node.r_u, m, &format!("node {id}: R_u"));
    }
    for (&(l, k), link) in &network.links {
        let tag = format!("link {}->{}", l + 1, k + 1);
        if l >= n || k >= n {
            report.push(format!("{tag}: node index out of range"));
            continue;
        }
        if l == k {
            if !link.is_zero() {
                report.push(format!("{tag}: self-link noise must be zero"));
            }
            continue;
        }
        if !topo.is_neighbor(l, k) {
            if !link.is_zero() {
                report.push(format!("{tag}: noise on a pair that is not connected"));
            }
            continue;
        }
        check_psd_matrix(&mut report, &link.r_w, m, &format!("{tag}: R_w"));
        check_psd_matrix(&mut report, &link.r_u, m, &format!("{tag}: R_u"));
        check_psd_matrix(&mut report, &link.r_psi, m, &format!("{tag}: R_psi"));
        if !(link.sigma_d2 >= 0.0 && link.sigma_d2.is_finite()) {
            report.push(format!("{tag}: measurement-link variance must be nonnegative"));
        }
    }
    match &network.trajectory {
        WeightTrajectory::Constant { w0 } | WeightTrajectory::Rotation { w0, .. } => {
            if w0.len() != m {
                report.push(format!("w0 must have {m} entries, got {}", w0.len()));
            }
        }
        WeightTrajectory::RandomWalk { w0, r_eta } => {
            if w0.len() != m {
                report.push(format!("w0 must have {m} entries, got {}", w0.len()));
            }
            check_psd_matrix(&mut report, r_eta, m, "R_eta");
        }
    }
    if let WeightTrajectory::Rotation { omega, .. } = network.trajectory {
        if !omega.is_finite() {
            report.push("rotation omega must be finite".into());
        }
    }
    report
}

/// Checks stochasticity and sparsity of the combination matrices.
pub fn validate_matrices(topology: &Topology, matrices: &CombinationMatrices) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = topology.n_nodes();
    for slot in [Slot::A1, Slot::C, Slot::A2] {
        let m = matrices.get(slot);
        if m.shape() != (n, n) {
            report.push(format!("{slot} must be {n}x{n}, got {}x{}", m.nrows(), m.ncols()));
            continue;
        }
        for l in 0..n {
            for k in 0..n {
                let v = m[(l, k)];
                if v.is_nan() || v < 0.0 {
                    report.push(format!("{slot}[{},{}] is negative ({v})", l + 1, k + 1));
                } else if v != 0.0 && !topology.is_neighbor(l, k) {
                    report.push(format!(
                        "{slot}[{},{}] must be zero: nodes are not connected",
                        l + 1,
                        k + 1
                    ));
                }
            }
        }
        if slot == Slot::C {
            for (l, row) in m.row_iter().enumerate() {
                let s = row.sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    report.push(format!("C row {} sums to {s}", l + 1));
                }
            }
        } else {
            for (k, col) in m.column_iter().enumerate() {
                let s = col.sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    report.push(format!("{slot} column {} sums to {s}", k + 1));
                }
            }
        }
    }
    report
}

/// Full validation of a model together with its combination matrices.
pub fn validate(network: &NetworkModel, matrices: &CombinationMatrices) -> ValidationReport {
    let mut report = validate_model(network);
    report
        .violations
        .extend(validate_matrices(&network.topology, matrices).violations);
    report
}

/// Inclusive draw range for a variance; `log` draws uniformly in log-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRange {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub log: bool,
}

impl VarianceRange {
    pub const ZERO: Self = Self { lo: 0.0, hi: 0.0, log: false };

    pub fn linear(lo: f64, hi: f64) -> Self {
        Self { lo, hi, log: false }
    }

    pub fn log(lo: f64, hi: f64) -> Self {
        Self { lo, hi, log: true }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let t: f64 = rng.random();
        if self.hi <= self.lo {
            self.lo
        } else if self.log && self.lo > 0.0 {
            (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp()
        } else {
            self.lo + t * (self.hi - self.lo)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorShape {
    /// `R_u = sigma_u² I`.
    ScaledIdentity,
    /// Random Hermitian PSD matrix with unit trace (`sigma_u2` is ignored).
    UnitTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRanges {
    pub mu: f64,
    pub regressor: RegressorShape,
    pub sigma_u2: VarianceRange,
    pub sigma_v2: VarianceRange,
    pub link_w: VarianceRange,
    pub link_d: VarianceRange,
    pub link_u: VarianceRange,
    pub link_psi: VarianceRange,
}

impl ProfileRanges {
    pub fn noise_free_links(mut self) -> Self {
        self.link_w = VarianceRange::ZERO;
        self.link_d = VarianceRange::ZERO;
        self.link_u = VarianceRange::ZERO;
        self.link_psi = VarianceRange::ZERO;
        self
    }
}

impl Default for ProfileRanges {
    fn default() -> Self {
        Self {
            mu: 0.01,
            regressor: RegressorShape::ScaledIdentity,
            sigma_u2: VarianceRange::linear(0.8, 1.8),
            sigma_v2: VarianceRange::log(1e-3, 1e-1),
            link_w: VarianceRange::log(1e-5, 1e-3),
            link_d: VarianceRange::log(1e-4, 1e-2),
            link_u: VarianceRange::log(1e-4, 1e-2),
            link_psi: VarianceRange::log(1e-6, 1e-4),
        }
    }
}

fn random_complex(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_unit_trace_psd(m: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(m, m, |_, _| random_complex(rng));
    let p = &g * g.adjoint();
    let tr = trace(&p).re;
    let p = p / c(tr, 0.0);
    // exact Hermitian symmetry after rounding
    crate::linalg::hermitian_part(&p)
}

fn scaled_identity(m: usize, s: f64) -> CMat {
    CMat::identity(m, m) * c(s, 0.0)
}

/// Random geometric graph in the unit square with the given link radius.
fn random_geometric(n: usize, radius: f64, rng: &mut impl Rng) -> Topology {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let mut edges = Vec::new();
    for l in 0..n {
        for k in l + 1..n {
            let (dx, dy) = (pts[l].0 - pts[k].0, pts[l].1 - pts[k].1);
            if dx * dx + dy * dy <= radius * radius {
                edges.push((l, k));
            }
        }
    }
    Topology::from_edges(n, &edges).expect("generated edges are in range")
}

/// Draws a connected random geometric network (radius `connectivity`) with
/// node and link statistics from `ranges`. Deterministic in `seed`.
pub fn random_network(
    seed: u64,
    n_nodes: usize,
    m_dim: usize,
    connectivity: f64,
    ranges: &ProfileRanges,
) -> Result<NetworkModel> {
    if n_nodes == 0 || m_dim == 0 {
        return Err(Error::InvalidNetwork("n_nodes and m_dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topology = (0..MAX_CONNECT_ATTEMPTS)
        .map(|_| random_geometric(n_nodes, connectivity, &mut rng))
        .find(Topology::is_connected)
        .ok_or(Error::Disconnected { attempts: MAX_CONNECT_ATTEMPTS })?;

    let nodes = (0..n_nodes)
        .map(|_| {
            let r_u = match ranges.regressor {
                RegressorShape::ScaledIdentity => scaled_identity(m_dim, ranges.sigma_u2.sample(&mut rng)),
                RegressorShape::UnitTrace => random_unit_trace_psd(m_dim, &mut rng),
            };
            NodeProfile { mu: ranges.mu, sigma_v2: ranges.sigma_v2.sample(&mut rng), r_u }
        })
        .collect();

    let mut links = BTreeMap::new();
    for (l, k) in link_index(&topology) {
        let noise = LinkNoise {
            r_w: scaled_identity(m_dim, ranges.link_w.sample(&mut rng)),
            sigma_d2: ranges.link_d.sample(&mut rng),
            r_u: scaled_identity(m_dim, ranges.link_u.sample(&mut rng)),
            r_psi: scaled_identity(m_dim, ranges.link_psi.sample(&mut rng)),
        };
        links.insert((l, k), noise);
    }

    let w0 = CVec::from_fn(m_dim, |_, _| random_complex(&mut rng));
    Ok(NetworkModel {
        topology,
        m_dim,
        nodes,
        links,
        trajectory: WeightTrajectory::Constant { w0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> NetworkModel {
        NetworkModel {
            topology: Topology::complete(2),
            m_dim: 1,
            nodes: vec![
                NodeProfile { mu: 0.01, sigma_v2: 0.1, r_u: CMat::identity(1, 1) };
                2
            ],
            links: BTreeMap::new(),
            trajectory: WeightTrajectory::Constant { w0: CVec::from_element(1, c(1.0, 0.0)) },
        }
    }

    fn star() -> Topology {
        Topology::from_edges(3, &[(0, 1), (0, 2)]).unwrap()
    }

    #[test]
    fn identity_matrices_pass() {
        let net = two_node();
        assert!(validate(&net, &CombinationMatrices::identity(2)).is_ok());
    }

    #[test]
    fn column_sum_violation_is_reported() {
        let net = two_node();
        let mut mats = CombinationMatrices::identity(2);
        mats.a1[(0, 0)] = 0.9;
        let report = validate(&net, &mats);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].0, "A1 column 1 sums to 0.9");
    }

    #[test]
    fn self_link_noise_is_reported() {
        let mut net = two_node();
        let mut noise = LinkNoise::zero(1);
        noise.r_u = CMat::identity(1, 1);
        net.links.insert((0, 0), noise);
        let report = validate_model(&net);
        assert!(report.violations.iter().any(|v| v.0.contains("self-link noise must be zero")));
    }

    #[test]
    fn non_neighbor_weight_is_reported() {
        let topo = star();
        let mut a = DMatrix::identity(3, 3);
        a[(1, 2)] = 0.5;
        a[(2, 2)] = 0.5;
        let report = validate_matrices(&topo, &CombinationMatrices::atc(a));
        assert!(report.violations.iter().any(|v| v.0.contains("A2[2,3] must be zero")));
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let mut net = two_node();
        net.topology = Topology::from_edges(2, &[]).unwrap();
        assert!(validate_model(&net)
            .violations
            .iter()
            .any(|v| v.0 == "graph is not connected"));
    }

    #[test]
    fn link_index_examples() {
        assert_eq!(link_index(&Topology::complete(2)), vec![(1, 0), (0, 1)]);
        assert_eq!(link_index(&star()), vec![(1, 0), (2, 0), (0, 1), (0, 2)]);
    }

    #[test]
    fn link_index_orders_in_neighbors_ascending() {
        // node 2 (index 1) with neighbors 5, 6, 7, 13, 15, 20 (1-based)
        let nbrs = [5usize, 6, 7, 13, 15, 20];
        let mut edges: Vec<_> = nbrs.iter().map(|&l| (l - 1, 1)).collect();
        edges.extend((2..19).map(|k| (k, k + 1)));
        edges.push((0, 2));
        let topo = Topology::from_edges(20, &edges).unwrap();
        let sub: Vec<_> = link_index(&topo)
            .into_iter()
            .filter(|&(_, k)| k == 1)
            .map(|(l, _)| l + 1)
            .collect();
        assert_eq!(sub, nbrs);
    }

    #[test]
    fn random_network_is_valid_and_deterministic() {
        let ranges = ProfileRanges::default();
        let a = random_network(1, 20, 2, 0.35, &ranges).unwrap();
        let b = random_network(1, 20, 2, 0.35, &ranges).unwrap();
        assert_eq!(a, b);
        assert!(validate_model(&a).is_ok());
        assert!(a.topology.is_connected());
    }

    #[test]
    fn zero_link_ranges_give_noise_free_model() {
        let ranges = ProfileRanges::default().noise_free_links();
        let net = random_network(3, 10, 2, 0.5, &ranges).unwrap();
        assert!(net.is_noise_free_exchange());
        assert_eq!(net.links.len(), link_index(&net.topology).len());
    }

    #[test]
    fn unreachable_connectivity_fails() {
        let ranges = ProfileRanges::default();
        assert!(matches!(
            random_network(1, 30, 1, 0.0, &ranges),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn unit_trace_regressors() {
        let ranges = ProfileRanges { regressor: RegressorShape::UnitTrace, ..Default::default() };
        let net = random_network(5, 6, 3, 0.6, &ranges).unwrap();
        for node in &net.nodes {
            assert!((trace(&node.r_u).re - 1.0).abs() < 1e-12);
            assert!(is_psd(&node.r_u));
        }
    }
}
