//! Seeded Monte-Carlo experiments and learning-curve reduction.

use std::ops::Range;

use rayon::prelude::*;

use super::data::{DataModel, IterationData};
use super::step::{diffusion_step, DiffusionState, StepPlan};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::network::{CombinationMatrices, NetworkModel, WeightTrajectory};

/// Per-node squared error above which a run counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

const Z: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub runs: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Forgetting factor of the adaptive rule, which then drives `A2`.
    pub adaptive_nu: Option<f64>,
    /// Keep the per-iteration empirical mean error and its standard error.
    pub record_mean_error: bool,
    /// Keep the network-average estimate and the true vector per iteration.
    pub record_trajectory: bool,
    /// Iterations over which each run's error is time-averaged.
    pub window: Option<Range<usize>>,
}

impl SimOptions {
    pub fn new(runs: usize, iterations: usize, seed: u64) -> Self {
        Self {
            runs,
            iterations,
            seed,
            threads: None,
            adaptive_nu: None,
            record_mean_error: false,
            record_trajectory: false,
            window: None,
        }
    }
}

/// Mean and standard error of one complex component across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub mean: C64,
    pub se_re: f64,
    pub se_im: f64,
}

/// Statistics of per-run time averages over [`SimOptions::window`].
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub range: Range<usize>,
    /// Time-averaged error `w° − w`, per `N·M` component.
    pub mean_error: Vec<ComplexEstimate>,
    pub msd: f64,
    pub msd_se: f64,
    pub emse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    /// Network MSD per iteration, linear scale.
    pub msd: Vec<f64>,
    /// Network EMSE per iteration, linear scale.
    pub emse: Vec<f64>,
    /// Runs that entered the averages.
    pub runs: usize,
    pub divergent_runs: usize,
    pub mean_error: Option<Vec<Vec<ComplexEstimate>>>,
    /// `(w̄_i, w°_i)` per iteration, averaged over runs.
    pub trajectory: Option<Vec<(Vec<C64>, Vec<C64>)>>,
    pub window: Option<WindowStats>,
}

impl LearningCurve {
    /// Mean linear MSD and EMSE over `range`.
    pub fn average(&self, range: Range<usize>) -> (f64, f64) {
        let len = range.len() as f64;
        let msd = self.msd[range.clone()].iter().sum::<f64>() / len;
        let emse = self.emse[range].iter().sum::<f64>() / len;
        (msd, emse)
    }
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Last 20% of the iterations, starting no earlier than five time constants
/// `1/(1 − rho)` of the slowest mean mode. `None` if that leaves nothing.
pub fn steady_state_window(iterations: usize, rho_b: f64) -> Option<Range<usize>> {
    let tail = (0.8 * iterations as f64).floor() as usize;
    let settle = if rho_b < 1.0 { (5.0 / (1.0 - rho_b)).ceil() } else { f64::INFINITY };
    if settle >= iterations as f64 {
        return None;
    }
    let start = tail.max(settle as usize);
    (start < iterations).then_some(start..iterations)
}

struct RunOutput {
    divergent: bool,
    msd: Vec<f64>,
    emse: Vec<f64>,
    error: Option<Vec<C64>>,
    trajectory: Option<Vec<C64>>,
    window_error: Vec<C64>,
    window_msd: f64,
    window_emse: f64,
}

fn advance_truth(traj: &WeightTrajectory, w: &mut [C64], eta: &[C64]) {
    match traj {
        WeightTrajectory::Constant { .. } => {}
        WeightTrajectory::RandomWalk { .. } => w.iter_mut().zip(eta).for_each(|(x, e)| *x += e),
        WeightTrajectory::Rotation { omega, .. } => {
            let r = C64::from_polar(1.0, *omega);
            w.iter_mut().for_each(|x| *x *= r);
        }
    }
}

fn one_run(
    network: &NetworkModel,
    plan: &StepPlan,
    model: &DataModel,
    opts: &SimOptions,
    run: u64,
) -> RunOutput {
    let (n, m, iters) = (plan.n, plan.m, opts.iterations);
    let mut streams = model.streams(opts.seed, run);
    let mut state = DiffusionState::new(n, m, network.w0().iter().copied().collect());
    if let Some(nu) = opts.adaptive_nu {
        state = state.with_adaptive(network, nu);
    }
    let mut data: IterationData = model.empty_data();
    let mut eta = vec![Z; m];
    let mut out = RunOutput {
        divergent: false,
        msd: Vec::with_capacity(iters),
        emse: Vec::with_capacity(iters),
        error: opts.record_mean_error.then(|| Vec::with_capacity(iters * n * m)),
        trajectory: opts.record_trajectory.then(|| Vec::with_capacity(iters * 2 * m)),
        window_error: vec![Z; n * m],
        window_msd: 0.0,
        window_emse: 0.0,
    };
    let window = opts.window.clone().unwrap_or(0..0);

    for i in 0..iters {
        let prev_true = state.w_true.clone();
        model.sample_eta(&mut streams, &mut eta);
        advance_truth(&network.trajectory, &mut state.w_true, &eta);
        model.sample(&mut streams, &state.w_true, &mut data);

        // a-priori error with each node's own regressor
        let mut emse = 0.0;
        for k in 0..n {
            let e: C64 = data
                .u(k)
                .iter()
                .zip(&prev_true)
                .zip(&state.w[k * m..(k + 1) * m])
                .map(|((u, t), w)| u * (t - w))
                .sum();
            emse += e.norm_sqr();
        }

        diffusion_step(plan, &mut state, &data);

        let mut msd = 0.0;
        let mut worst = 0.0_f64;
        for k in 0..n {
            let node: f64 = state.w[k * m..(k + 1) * m]
                .iter()
                .zip(&state.w_true)
                .map(|(w, t)| (t - w).norm_sqr())
                .sum();
            worst = if node.is_finite() { worst.max(node) } else { f64::INFINITY };
            msd += node;
        }
        if worst.is_nan() || worst > DIVERGENCE_THRESHOLD {
            out.divergent = true;
            return out;
        }
        let (msd, emse) = (msd / n as f64, emse / n as f64);
        out.msd.push(msd);
        out.emse.push(emse);

        let error = |k: usize| state.w_true[k % m] - state.w[k];
        if let Some(buf) = out.error.as_mut() {
            buf.extend((0..n * m).map(error));
        }
        if let Some(buf) = out.trajectory.as_mut() {
            for j in 0..m {
                let avg: C64 = (0..n).map(|k| state.w[k * m + j]).sum::<C64>() / n as f64;
                buf.push(avg);
            }
            buf.extend_from_slice(&state.w_true);
        }
        if window.contains(&i) {
            out.window_error.iter_mut().enumerate().for_each(|(c, x)| *x += error(c));
            out.window_msd += msd;
            out.window_emse += emse;
        }
    }
    if !window.is_empty() {
        let len = window.len() as f64;
        out.window_error.iter_mut().for_each(|x| *x /= len);
        out.window_msd /= len;
        out.window_emse /= len;
    }
    out
}

#[derive(Default)]
struct Moments {
    sum: Vec<C64>,
    /// Sum of squares of real and imaginary parts.
    sq: Vec<(f64, f64)>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self { sum: vec![Z; len], sq: vec![(0.0, 0.0); len] }
    }

    fn add(&mut self, xs: &[C64]) {
        for ((s, q), x) in self.sum.iter_mut().zip(&mut self.sq).zip(xs) {
            *s += x;
            q.0 += x.re * x.re;
            q.1 += x.im * x.im;
        }
    }

    fn finish(&self, runs: usize) -> Vec<ComplexEstimate> {
        let r = runs as f64;
        self.sum
            .iter()
            .zip(&self.sq)
            .map(|(s, q)| {
                let mean = s / r;
                let se = |sq: f64, mu: f64| {
                    if runs < 2 {
                        f64::NAN
                    } else {
                        ((sq - r * mu * mu).max(0.0) / (r - 1.0) / r).sqrt()
                    }
                };
                ComplexEstimate { mean, se_re: se(q.0, mean.re), se_im: se(q.1, mean.im) }
            })
            .collect()
    }
}

/// Runs `opts.runs` independent experiments of the recursion defined by
/// `network` and `mats`. Runs are executed in parallel and reduced in run
/// order, so the result depends only on the seed.
pub fn run_monte_carlo(
    network: &NetworkModel,
    mats: &CombinationMatrices,
    opts: &SimOptions,
) -> Result<LearningCurve> {
    if opts.runs == 0 || opts.iterations == 0 {
        return Err(Error::Config("runs and iterations must be at least 1".into()));
    }
    if let Some(w) = &opts.window {
        if w.is_empty() || w.end > opts.iterations {
            return Err(Error::Config(format!(
                "averaging window {w:?} does not fit in {} iterations",
                opts.iterations
            )));
        }
    }
    let plan = StepPlan::new(network, mats);
    let model = DataModel::new(network);
    let body = || reduce(network, &plan, &model, opts);
    match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}

fn reduce(
    network: &NetworkModel,
    plan: &StepPlan,
    model: &DataModel,
    opts: &SimOptions,
) -> Result<LearningCurve> {
    let (n, m, iters) = (plan.n, plan.m, opts.iterations);
    let mut msd = vec![0.0; iters];
    let mut emse = vec![0.0; iters];
    let mut error = opts.record_mean_error.then(|| Moments::new(iters * n * m));
    let mut traj = opts.record_trajectory.then(|| vec![Z; iters * 2 * m]);
    let mut win_err = Moments::new(n * m);
    let (mut win_msd, mut win_msd_sq, mut win_emse) = (0.0, 0.0, 0.0);
    let (mut good, mut bad) = (0, 0);

    // bounded batches keep memory flat while preserving run order
    let batch = (rayon::current_num_threads() * 4).max(1);
    for start in (0..opts.runs).step_by(batch) {
        let end = (start + batch).min(opts.runs);
        let outputs: Vec<RunOutput> = (start..end)
            .into_par_iter()
            .map(|r| one_run(network, plan, model, opts, r as u64))
            .collect();
        for o in outputs {
            if o.divergent {
                bad += 1;
                continue;
            }
            good += 1;
            msd.iter_mut().zip(&o.msd).for_each(|(a, b)| *a += b);
            emse.iter_mut().zip(&o.emse).for_each(|(a, b)| *a += b);
            if let (Some(acc), Some(e)) = (error.as_mut(), o.error.as_ref()) {
                acc.add(e);
            }
            if let (Some(acc), Some(t)) = (traj.as_mut(), o.trajectory.as_ref()) {
                acc.iter_mut().zip(t).for_each(|(a, b)| *a += b);
            }
            win_err.add(&o.window_error);
            win_msd += o.window_msd;
            win_msd_sq += o.window_msd * o.window_msd;
            win_emse += o.window_emse;
        }
    }

    let g = good as f64;
    let scale = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x /= g);
    scale(&mut msd);
    scale(&mut emse);
    let mean_error = error.map(|acc| {
        acc.finish(good)
            .chunks(n * m)
            .map(<[ComplexEstimate]>::to_vec)
            .collect()
    });
    let trajectory = traj.map(|acc| {
        acc.chunks(2 * m)
            .map(|c| {
                (
                    c[..m].iter().map(|x| x / g).collect(),
                    c[m..].iter().map(|x| x / g).collect(),
                )
            })
            .collect()
    });
    let window = opts.window.clone().map(|range| {
        let mean = win_msd / g;
        let var = if good > 1 { (win_msd_sq - g * mean * mean).max(0.0) / (g - 1.0) } else { f64::NAN };
        WindowStats {
            range,
            mean_error: win_err.finish(good),
            msd: mean,
            msd_se: (var / g).sqrt(),
            emse: win_emse / g,
        }
    });
    Ok(LearningCurve {
        msd,
        emse,
        runs: good,
        divergent_runs: bad,
        mean_error,
        trajectory,
        window,
    })
}
