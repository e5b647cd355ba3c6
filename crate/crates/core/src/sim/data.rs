//! Node data generation and noisy exchange over links.
//!
//! Regressors are stored as the entries of the `1×M` row vector `u`, so
//! `u w = Σ_j u_j w_j` and `u* e` is the entrywise conjugate scaled by `e`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::rng::{correlated_complex, stream, unit_complex, Source};
use crate::linalg::{is_zero, psd_factor, CMat, CVec, C64};
use crate::network::{link_index, LinkNoise, NetworkModel, NodeProfile};

const Z: C64 = C64 { re: 0.0, im: 0.0 };

fn row_major(m: &CMat) -> Vec<C64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect()
}

/// Row-major factor `L` with `L L* = r`, or `None` when `r` is zero.
fn factor(r: &CMat) -> Option<Vec<C64>> {
    (!is_zero(r)).then(|| row_major(&psd_factor(r)))
}

fn dot(u: &[C64], w: &[C64]) -> C64 {
    u.iter().zip(w).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone)]
pub struct NodeSampler {
    factor: Option<Vec<C64>>,
    sigma_v: f64,
}

impl NodeSampler {
    pub fn new(profile: &NodeProfile) -> Self {
        Self { factor: factor(&profile.r_u), sigma_v: profile.sigma_v2.sqrt() }
    }

    pub fn sample_u(&self, rng: &mut impl Rng, u_out: &mut [C64]) {
        match &self.factor {
            Some(l) => {
                correlated_complex(rng, l, u_out);
                u_out.iter_mut().for_each(|x| *x = x.conj());
            }
            None => u_out.fill(Z),
        }
    }

    pub fn sample_v(&self, rng: &mut impl Rng) -> C64 {
        if self.sigma_v > 0.0 {
            unit_complex(rng) * self.sigma_v
        } else {
            Z
        }
    }
}

/// Draws `(d, u, v)` for one node from a single stream, `d = u w + v`.
pub fn sample_data(rng: &mut ChaCha8Rng, profile: &NodeProfile, w_true: &CVec) -> (C64, CVec, C64) {
    let sampler = NodeSampler::new(profile);
    let mut u = vec![Z; w_true.len()];
    sampler.sample_u(rng, &mut u);
    let v = sampler.sample_v(rng);
    (dot(&u, w_true.as_slice()) + v, CVec::from_vec(u), v)
}

#[derive(Debug, Clone)]
pub struct LinkSampler {
    w: Option<Vec<C64>>,
    d_std: f64,
    u: Option<Vec<C64>>,
    psi: Option<Vec<C64>>,
}

/// One stream per noise source on a link.
#[derive(Debug, Clone)]
pub struct LinkStreams {
    pub w: ChaCha8Rng,
    pub d: ChaCha8Rng,
    pub u: ChaCha8Rng,
    pub psi: ChaCha8Rng,
}

impl LinkStreams {
    pub fn new(master: u64, run: u64, entity: u64) -> Self {
        Self {
            w: stream(master, run, entity, Source::LinkW),
            d: stream(master, run, entity, Source::LinkD),
            u: stream(master, run, entity, Source::LinkU),
            psi: stream(master, run, entity, Source::LinkPsi),
        }
    }
}

fn draw_vector(f: &Option<Vec<C64>>, rng: &mut impl Rng, out: &mut [C64]) {
    match f {
        Some(l) => correlated_complex(rng, l, out),
        None => out.fill(Z),
    }
}

impl LinkSampler {
    pub fn new(noise: &LinkNoise) -> Self {
        Self {
            w: factor(&noise.r_w),
            d_std: noise.sigma_d2.sqrt(),
            u: factor(&noise.r_u),
            psi: factor(&noise.r_psi),
        }
    }

    /// Fills the four noise realizations of one link. The regressor noise is
    /// a row vector, drawn as the conjugate of a column with covariance `R`.
    pub fn draw(
        &self,
        s: &mut LinkStreams,
        w: &mut [C64],
        d: &mut C64,
        u: &mut [C64],
        psi: &mut [C64],
    ) {
        draw_vector(&self.w, &mut s.w, w);
        *d = if self.d_std > 0.0 { unit_complex(&mut s.d) * self.d_std } else { Z };
        draw_vector(&self.u, &mut s.u, u);
        u.iter_mut().for_each(|x| *x = x.conj());
        draw_vector(&self.psi, &mut s.psi, psi);
    }
}

/// Quantities a node shares with a neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct Payloads {
    pub w: CVec,
    pub psi: CVec,
    pub d: C64,
    /// Regressor row entries.
    pub u: CVec,
}

/// Applies the additive noises of one link. `noise = None` is the self-link,
/// which passes everything through unchanged.
pub fn perturb_exchange(streams: &mut LinkStreams, noise: Option<&LinkNoise>, p: &Payloads) -> Payloads {
    let Some(noise) = noise else { return p.clone() };
    let m = p.w.len();
    let (mut w, mut u, mut psi, mut d) = (vec![Z; m], vec![Z; m], vec![Z; m], Z);
    LinkSampler::new(noise).draw(streams, &mut w, &mut d, &mut u, &mut psi);
    Payloads {
        w: &p.w + CVec::from_vec(w),
        psi: &p.psi + CVec::from_vec(psi),
        d: p.d + d,
        u: &p.u + CVec::from_vec(u),
    }
}

/// Everything drawn in one iteration, kept so the error recursion can be
/// replayed exactly. Link arrays follow `link_index` order.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationData {
    pub m: usize,
    /// `N×M` regressor rows.
    pub u: Vec<C64>,
    pub d: Vec<C64>,
    /// Measurement noise.
    pub v: Vec<C64>,
    pub link_w: Vec<C64>,
    pub link_d: Vec<C64>,
    pub link_u: Vec<C64>,
    pub link_psi: Vec<C64>,
}

impl IterationData {
    pub fn new(n: usize, n_links: usize, m: usize) -> Self {
        Self {
            m,
            u: vec![Z; n * m],
            d: vec![Z; n],
            v: vec![Z; n],
            link_w: vec![Z; n_links * m],
            link_d: vec![Z; n_links],
            link_u: vec![Z; n_links * m],
            link_psi: vec![Z; n_links * m],
        }
    }

    pub fn u(&self, k: usize) -> &[C64] {
        &self.u[k * self.m..(k + 1) * self.m]
    }
}

/// Immutable sampling plan shared by all runs.
#[derive(Debug, Clone)]
pub struct DataModel {
    pub n: usize,
    pub m: usize,
    pub links: Vec<(usize, usize)>,
    nodes: Vec<NodeSampler>,
    link_samplers: Vec<LinkSampler>,
    eta: Option<Vec<C64>>,
}

/// Per-run random streams.
#[derive(Debug, Clone)]
pub struct RunStreams {
    node: Vec<(ChaCha8Rng, ChaCha8Rng)>,
    link: Vec<LinkStreams>,
    eta: ChaCha8Rng,
}

impl DataModel {
    pub fn new(network: &NetworkModel) -> Self {
        let links = link_index(&network.topology);
        let zero = LinkNoise::zero(network.m_dim);
        let link_samplers = links
            .iter()
            .map(|&(l, k)| LinkSampler::new(network.link(l, k).unwrap_or(&zero)))
            .collect();
        Self {
            n: network.n_nodes(),
            m: network.m_dim,
            nodes: network.nodes.iter().map(NodeSampler::new).collect(),
            link_samplers,
            links,
            eta: network.trajectory.r_eta().and_then(factor),
        }
    }

    pub fn streams(&self, master: u64, run: u64) -> RunStreams {
        let n = self.n as u64;
        RunStreams {
            node: (0..n)
                .map(|k| {
                    (
                        stream(master, run, k, Source::Regressor),
                        stream(master, run, k, Source::Measurement),
                    )
                })
                .collect(),
            link: (0..self.links.len() as u64)
                .map(|j| LinkStreams::new(master, run, n + j))
                .collect(),
            eta: stream(master, run, n + self.links.len() as u64, Source::Eta),
        }
    }

    pub fn empty_data(&self) -> IterationData {
        IterationData::new(self.n, self.links.len(), self.m)
    }

    pub fn sample(&self, s: &mut RunStreams, w_true: &[C64], out: &mut IterationData) {
        let m = self.m;
        for (k, node) in self.nodes.iter().enumerate() {
            let (ru, rv) = &mut s.node[k];
            let u = &mut out.u[k * m..(k + 1) * m];
            node.sample_u(ru, u);
            let v = node.sample_v(rv);
            out.d[k] = dot(u, w_true) + v;
            out.v[k] = v;
        }
        for (j, link) in self.link_samplers.iter().enumerate() {
            let r = j * m..(j + 1) * m;
            link.draw(
                &mut s.link[j],
                &mut out.link_w[r.clone()],
                &mut out.link_d[j],
                &mut out.link_u[r.clone()],
                &mut out.link_psi[r],
            );
        }
    }

    /// Random-walk increment; zero when the model has no `R_eta`.
    pub fn sample_eta(&self, s: &mut RunStreams, out: &mut [C64]) {
        draw_vector(&self.eta, &mut s.eta, out);
    }
}
