//! One iteration of the general noisy diffusion recursion:
//! combine weight estimates with `A1`, adapt on `C`-weighted neighbor data,
//! combine intermediate estimates with `A2`.

use crate::linalg::C64;
use crate::network::{CombinationMatrices, NetworkModel};
use crate::rules::AdaptiveWeightState;

use super::data::IterationData;

const Z: C64 = C64 { re: 0.0, im: 0.0 };

/// Which loop structure to run. `Atc` and `Cta` skip the identity
/// combinations and give bit-identical results to `General`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    General,
    /// `A1 = C = I`.
    Atc,
    /// `A2 = C = I`.
    Cta,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    l: usize,
    /// Position in `link_index`, `None` for the node itself.
    link: Option<usize>,
    a1: f64,
    c: f64,
    a2: f64,
}

/// Neighborhood weights laid out for the inner loops.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub n: usize,
    pub m: usize,
    pub kind: StepKind,
    mu: Vec<f64>,
    nodes: Vec<Vec<Entry>>,
}

impl StepPlan {
    /// Picks the cheapest [`StepKind`] the matrices allow.
    pub fn new(network: &NetworkModel, mats: &CombinationMatrices) -> Self {
        let n = network.n_nodes();
        let eye = nalgebra::DMatrix::<f64>::identity(n, n);
        let kind = if mats.c != eye {
            StepKind::General
        } else if mats.a1 == eye {
            StepKind::Atc
        } else if mats.a2 == eye {
            StepKind::Cta
        } else {
            StepKind::General
        };
        Self::with_kind(network, mats, kind)
    }

    pub fn with_kind(network: &NetworkModel, mats: &CombinationMatrices, kind: StepKind) -> Self {
        let topo = &network.topology;
        let mut next_link = 0;
        let nodes = (0..topo.n_nodes())
            .map(|k| {
                topo.neighbors(k)
                    .iter()
                    .map(|&l| {
                        let link = (l != k).then(|| {
                            next_link += 1;
                            next_link - 1
                        });
                        Entry { l, link, a1: mats.a1[(l, k)], c: mats.c[(l, k)], a2: mats.a2[(l, k)] }
                    })
                    .collect()
            })
            .collect();
        Self {
            n: topo.n_nodes(),
            m: network.m_dim,
            kind,
            mu: network.nodes.iter().map(|p| p.mu).collect(),
            nodes,
        }
    }
}

/// Per-run recursion state. Vectors are stacked node by node (`N·M`).
#[derive(Debug, Clone)]
pub struct DiffusionState {
    pub w: Vec<C64>,
    pub phi: Vec<C64>,
    pub psi: Vec<C64>,
    pub adaptive: Option<Vec<AdaptiveWeightState>>,
    pub w_true: Vec<C64>,
    next: Vec<C64>,
    buf: Vec<C64>,
    dists: Vec<f64>,
}

impl DiffusionState {
    /// Zero estimates everywhere.
    pub fn new(n: usize, m: usize, w_true: Vec<C64>) -> Self {
        Self {
            w: vec![Z; n * m],
            phi: vec![Z; n * m],
            psi: vec![Z; n * m],
            adaptive: None,
            w_true,
            next: vec![Z; n * m],
            buf: vec![Z; m],
            dists: Vec::new(),
        }
    }

    pub fn with_adaptive(mut self, network: &NetworkModel, nu: f64) -> Self {
        self.adaptive = Some(
            (0..network.n_nodes())
                .map(|k| AdaptiveWeightState::new(&network.topology, k, nu))
                .collect(),
        );
        self
    }
}

fn accumulate(dst: &mut [C64], first: bool, src: impl Iterator<Item = C64>) {
    if first {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d = s);
    } else {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
    }
}

fn slice(v: &[C64], i: usize, m: usize) -> &[C64] {
    &v[i * m..(i + 1) * m]
}

/// Advances `state` by one iteration using the pre-drawn `data`. When the
/// state carries adaptive estimators they replace the `A2` weights.
pub fn diffusion_step(plan: &StepPlan, state: &mut DiffusionState, data: &IterationData) {
    let (n, m) = (plan.n, plan.m);
    let DiffusionState { w, phi, psi, adaptive, next, buf, dists, .. } = state;

    for k in 0..n {
        let entries = &plan.nodes[k];
        let phi_k = &mut phi[k * m..(k + 1) * m];

        // combine weight estimates
        if plan.kind == StepKind::Atc {
            phi_k.copy_from_slice(slice(w, k, m));
        } else {
            let mut first = true;
            for e in entries.iter().filter(|e| e.a1 != 0.0) {
                let wl = slice(w, e.l, m);
                match e.link {
                    Some(j) => {
                        let noise = slice(&data.link_w, j, m);
                        accumulate(phi_k, first, wl.iter().zip(noise).map(|(a, b)| (a + b) * e.a1));
                    }
                    None => accumulate(phi_k, first, wl.iter().map(|a| a * e.a1)),
                }
                first = false;
            }
        }

        // adapt
        let psi_k = &mut psi[k * m..(k + 1) * m];
        let mu = plan.mu[k];
        if plan.kind == StepKind::General {
            let acc = &mut next[k * m..(k + 1) * m];
            let mut first = true;
            for e in entries.iter().filter(|e| e.c != 0.0) {
                let ul = data.u(e.l);
                let d = match e.link {
                    Some(j) => {
                        let noise = slice(&data.link_u, j, m);
                        buf.iter_mut().zip(ul.iter().zip(noise)).for_each(|(b, (a, v))| *b = a + v);
                        data.d[e.l] + data.link_d[j]
                    }
                    None => {
                        buf.copy_from_slice(ul);
                        data.d[e.l]
                    }
                };
                let err = d - dot(buf, phi_k);
                accumulate(acc, first, buf.iter().map(|u| (u.conj() * err) * e.c));
                first = false;
            }
            if first {
                // column of C without any weight: no adaptation at this node
                acc.fill(Z);
            }
            for ((p, f), a) in psi_k.iter_mut().zip(phi_k.iter()).zip(acc.iter()) {
                *p = f + a * mu;
            }
        } else {
            let uk = data.u(k);
            let err = data.d[k] - dot(uk, phi_k);
            for ((p, f), u) in psi_k.iter_mut().zip(phi_k.iter()).zip(uk) {
                *p = f + (u.conj() * err) * mu;
            }
        }
    }

    // combine intermediate estimates
    for k in 0..n {
        let entries = &plan.nodes[k];
        let out = &mut next[k * m..(k + 1) * m];
        if let Some(states) = adaptive.as_mut() {
            dists.clear();
            let wk = slice(w, k, m);
            for e in entries {
                let pl = slice(psi, e.l, m);
                let d: f64 = match e.link {
                    Some(j) => pl
                        .iter()
                        .zip(slice(&data.link_psi, j, m))
                        .zip(wk)
                        .map(|((p, v), x)| (p + v - x).norm_sqr())
                        .sum(),
                    None => pl.iter().zip(wk).map(|(p, x)| (p - x).norm_sqr()).sum(),
                };
                dists.push(d);
            }
            let weights = states[k].update_from_distances(dists);
            combine(out, entries.iter().zip(weights).map(|(e, a)| (*e, a)), psi, data, m);
        } else if plan.kind == StepKind::Cta {
            out.copy_from_slice(slice(psi, k, m));
        } else {
            combine(out, entries.iter().map(|e| (*e, e.a2)), psi, data, m);
        }
    }
    std::mem::swap(w, next);
}

fn combine(
    out: &mut [C64],
    weighted: impl Iterator<Item = (Entry, f64)>,
    psi: &[C64],
    data: &IterationData,
    m: usize,
) {
    let mut first = true;
    for (e, a) in weighted.filter(|(_, a)| *a != 0.0) {
        let pl = slice(psi, e.l, m);
        match e.link {
            Some(j) => {
                let noise = slice(&data.link_psi, j, m);
                accumulate(out, first, pl.iter().zip(noise).map(|(p, v)| (p + v) * a));
            }
            None => accumulate(out, first, pl.iter().map(|p| p * a)),
        }
        first = false;
    }
}

fn dot(u: &[C64], w: &[C64]) -> C64 {
    u.iter().zip(w).map(|(a, b)| a * b).sum()
}
