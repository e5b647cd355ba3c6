//! One-shot evaluation of every closed-form quantity for a configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix_to_pairs;
use crate::network::{CombinationMatrices, NetworkModel};
use crate::sim::to_db;

use super::moments::{assemble_mean_dynamics, bias_unchecked, noise_moments_with_bias, step_size_bounds, StepSizeBound};
use super::norms::stability_report;
use super::steady::{standard_weightings, tracking_metrics, SolveMethod, SteadyStateSolver};
use super::moments::numerator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub rho_b: f64,
    pub rho_spectral_bound: f64,
    pub rho_f: f64,
    pub mean_stable: bool,
    pub mu_bounds: Vec<StepSizeBound>,
    /// `‖g‖`; absent when the mean recursion is unstable.
    pub bias_norm: Option<f64>,
    /// Stacked bias vector as `[re, im]` pairs.
    pub bias_g: Option<Vec<[f64; 2]>>,
    pub msd: Option<f64>,
    pub emse: Option<f64>,
    pub msd_db: Option<f64>,
    pub emse_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msd_track: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emse_track: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msd_track_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emse_track_db: Option<f64>,
    pub warnings: Vec<String>,
}

impl TheoryReport {
    /// Mean-square stable and every metric evaluated.
    pub fn is_stable(&self) -> bool {
        self.mean_stable && self.msd.is_some()
    }
}

/// Evaluates the bias, stability margins and steady-state MSD/EMSE (plus
/// tracking values for random-walk targets). Instability does not fail:
/// it is recorded in `warnings` and the affected fields are left empty.
pub fn analyze(network: &NetworkModel, mats: &CombinationMatrices) -> Result<TheoryReport> {
    let md = assemble_mean_dynamics(network, mats, network.w0())?;
    let stab = stability_report(&md)?;
    let mu_bounds = step_size_bounds(network, mats);
    let mut warnings = stab.warnings.clone();
    for b in mu_bounds.iter().filter(|b| !b.within_tight) {
        warnings.push(format!("node {}: mu = {} exceeds the bound {:.6}", b.node, b.mu, b.tight));
    }

    let mut report = TheoryReport {
        rho_b: stab.rho_b,
        rho_spectral_bound: stab.rho_spectral_bound,
        rho_f: stab.rho_f,
        mean_stable: stab.mean_stable,
        mu_bounds,
        bias_norm: None,
        bias_g: None,
        msd: None,
        emse: None,
        msd_db: None,
        emse_db: None,
        msd_track: None,
        emse_track: None,
        msd_track_db: None,
        emse_track_db: None,
        warnings,
    };
    if !stab.mean_stable {
        return Ok(report);
    }

    let g = bias_unchecked(&md)?;
    report.bias_norm = Some(g.norm());
    report.bias_g = Some(matrix_to_pairs(&crate::linalg::CMat::from_column_slice(g.len(), 1, g.as_slice())));
    let nm = noise_moments_with_bias(network, mats, &md, g);

    let solver = match SteadyStateSolver::new(&md.b, SolveMethod::auto(md.n * md.m)) {
        Ok(s) => s,
        Err(Error::MeanSquareUnstable { rho_f }) => {
            report.warnings.push(format!("mean-square-unstable: rho(F) = {rho_f:.9} >= 1"));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let q = numerator(&md, &nm);
    let (w_msd, w_emse) = standard_weightings(network);
    let msd = solver.metric(&q, &w_msd)?;
    let emse = solver.metric(&q, &w_emse)?;
    report.msd = Some(msd);
    report.emse = Some(emse);
    report.msd_db = Some(to_db(msd));
    report.emse_db = Some(to_db(emse));

    if let Some(r_eta) = network.trajectory.r_eta() {
        let (mt, et) = tracking_metrics(network, &md, &nm, r_eta)?;
        report.msd_track = Some(mt);
        report.emse_track = Some(et);
        report.msd_track_db = Some(to_db(mt));
        report.emse_track_db = Some(to_db(et));
    }
    Ok(report)
}
