//! JSON network description. Indices are 1-based; complex entries are
//! `[re, im]` pairs and matrices are row-major lists of pairs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_from_pairs, matrix_to_pairs, CMat, CVec, C64};
use crate::network::{LinkNoise, NetworkModel, NodeProfile, Topology, TrajectoryMode, WeightTrajectory};

pub type Pairs = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub n_nodes: usize,
    pub m_dim: usize,
    /// Undirected cross links `[l, k]`; self-loops are implicit.
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    pub nodes: Vec<NodeEntry>,
    #[serde(default)]
    pub links: Vec<LinkEntry>,
    pub weights: WeightsEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub mu: f64,
    pub sigma_v2: f64,
    pub r_u: Pairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_w: Option<Pairs>,
    #[serde(default)]
    pub sigma_d2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_u_link: Option<Pairs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_psi: Option<Pairs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsEntry {
    pub mode: TrajectoryMode,
    pub w0: Pairs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_eta: Option<Pairs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

fn matrix(pairs: &[[f64; 2]], m: usize, what: &str) -> Result<CMat> {
    matrix_from_pairs(pairs, m).ok_or_else(|| {
        Error::InvalidNetwork(format!("{what}: expected {} entries, got {}", m * m, pairs.len()))
    })
}

fn optional_matrix(pairs: &Option<Pairs>, m: usize, what: &str) -> Result<CMat> {
    match pairs {
        Some(p) => matrix(p, m, what),
        None => Ok(CMat::zeros(m, m)),
    }
}

fn one_based(i: usize, n: usize, what: &str) -> Result<usize> {
    if (1..=n).contains(&i) {
        Ok(i - 1)
    } else {
        Err(Error::InvalidNetwork(format!("{what}: node {i} outside 1..={n}")))
    }
}

impl NetworkFile {
    pub fn into_model(&self) -> Result<NetworkModel> {
        let (n, m) = (self.n_nodes, self.m_dim);
        if m == 0 {
            return Err(Error::InvalidNetwork("m_dim must be positive".into()));
        }
        let edges = self
            .edges
            .iter()
            .map(|&[l, k]| Ok((one_based(l, n, "edge")?, one_based(k, n, "edge")?)))
            .collect::<Result<Vec<_>>>()?;
        let topology = Topology::from_edges(n, &edges)?;

        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(k, e)| {
                Ok(NodeProfile {
                    mu: e.mu,
                    sigma_v2: e.sigma_v2,
                    r_u: matrix(&e.r_u, m, &format!("node {} r_u", k + 1))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut links = BTreeMap::new();
        for e in &self.links {
            let l = one_based(e.from, n, "link")?;
            let k = one_based(e.to, n, "link")?;
            let tag = format!("link {}->{}", e.from, e.to);
            let noise = LinkNoise {
                r_w: optional_matrix(&e.r_w, m, &format!("{tag} r_w"))?,
                sigma_d2: e.sigma_d2,
                r_u: optional_matrix(&e.r_u_link, m, &format!("{tag} r_u_link"))?,
                r_psi: optional_matrix(&e.r_psi, m, &format!("{tag} r_psi"))?,
            };
            if links.insert((l, k), noise).is_some() {
                return Err(Error::InvalidNetwork(format!("{tag} listed twice")));
            }
        }

        let w = &self.weights;
        let w0 = CVec::from_iterator(w.w0.len(), w.w0.iter().map(|&[re, im]| C64::new(re, im)));
        let trajectory = match w.mode {
            TrajectoryMode::Stationary => WeightTrajectory::Constant { w0 },
            TrajectoryMode::RandomWalk => {
                let r_eta = w.r_eta.as_ref().ok_or_else(|| {
                    Error::InvalidNetwork("random_walk mode needs r_eta".into())
                })?;
                WeightTrajectory::RandomWalk { w0, r_eta: matrix(r_eta, m, "r_eta")? }
            }
            TrajectoryMode::Rotation => {
                let omega = w
                    .omega
                    .ok_or_else(|| Error::InvalidNetwork("rotation mode needs omega".into()))?;
                WeightTrajectory::Rotation { w0, omega }
            }
        };
        Ok(NetworkModel { topology, m_dim: m, nodes, links, trajectory })
    }

    pub fn from_model(model: &NetworkModel) -> Self {
        let pairs = |v: &CVec| v.iter().map(|z| [z.re, z.im]).collect();
        let weights = match &model.trajectory {
            WeightTrajectory::Constant { w0 } => WeightsEntry {
                mode: TrajectoryMode::Stationary,
                w0: pairs(w0),
                r_eta: None,
                omega: None,
            },
            WeightTrajectory::RandomWalk { w0, r_eta } => WeightsEntry {
                mode: TrajectoryMode::RandomWalk,
                w0: pairs(w0),
                r_eta: Some(matrix_to_pairs(r_eta)),
                omega: None,
            },
            WeightTrajectory::Rotation { w0, omega } => WeightsEntry {
                mode: TrajectoryMode::Rotation,
                w0: pairs(w0),
                r_eta: None,
                omega: Some(*omega),
            },
        };
        Self {
            n_nodes: model.n_nodes(),
            m_dim: model.m_dim,
            edges: model.topology.edges().into_iter().map(|(l, k)| [l + 1, k + 1]).collect(),
            nodes: model
                .nodes
                .iter()
                .map(|p| NodeEntry { mu: p.mu, sigma_v2: p.sigma_v2, r_u: matrix_to_pairs(&p.r_u) })
                .collect(),
            links: model
                .links
                .iter()
                .map(|(&(l, k), noise)| LinkEntry {
                    from: l + 1,
                    to: k + 1,
                    r_w: Some(matrix_to_pairs(&noise.r_w)),
                    sigma_d2: noise.sigma_d2,
                    r_u_link: Some(matrix_to_pairs(&noise.r_u)),
                    r_psi: Some(matrix_to_pairs(&noise.r_psi)),
                })
                .collect(),
            weights,
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn load_network(path: &Path) -> Result<NetworkModel> {
    read_json::<NetworkFile>(path)?.into_model()
}

pub fn save_network(path: &Path, model: &NetworkModel) -> Result<()> {
    write_json(path, &NetworkFile::from_model(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{random_network, ProfileRanges};

    #[test]
    fn model_round_trips_through_json() {
        let mut net = random_network(7, 8, 2, 0.5, &ProfileRanges::default()).unwrap();
        let text = serde_json::to_string(&NetworkFile::from_model(&net)).unwrap();
        let back: NetworkFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_model().unwrap(), net);

        net.trajectory = WeightTrajectory::Rotation { w0: net.w0().clone(), omega: 0.001 };
        let text = serde_json::to_string(&NetworkFile::from_model(&net)).unwrap();
        let back: NetworkFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_model().unwrap(), net);
    }

    #[test]
    fn minimal_file_parses() {
        let text = r#"{
            "n_nodes": 2, "m_dim": 1, "edges": [[1, 2]],
            "nodes": [{"mu": 0.01, "sigma_v2": 1.0, "r_u": [[1.0, 0.0]]},
                      {"mu": 0.01, "sigma_v2": 1.0, "r_u": [[1.0, 0.0]]}],
            "links": [{"from": 2, "to": 1, "r_u_link": [[0.2, 0.0]]}],
            "weights": {"mode": "constant", "w0": [[1.0, 0.0]]}
        }"#;
        let net = serde_json::from_str::<NetworkFile>(text).unwrap().into_model().unwrap();
        assert_eq!(net.link(1, 0).unwrap().r_u[(0, 0)].re, 0.2);
        assert!(net.link(0, 1).is_none());
    }

    #[test]
    fn bad_indices_are_rejected() {
        let text = r#"{"n_nodes": 2, "m_dim": 1, "edges": [[1, 3]],
            "nodes": [], "weights": {"mode": "stationary", "w0": [[1.0, 0.0]]}}"#;
        let err = serde_json::from_str::<NetworkFile>(text).unwrap().into_model().unwrap_err();
        assert!(err.to_string().contains("node 3 outside"));
    }
}
