//! Steady-state weighted error variance.
//!
//! For a weighting `Ω` the steady-state value is `vec(Q)* (I − F)⁻¹ vec(Ω)`
//! with `F = Bᵀ ⊗ B*`. Writing `Σ = unvec((I − F)⁻¹ vec(Ω))` this is
//! `Tr(Q Σ)` where `Σ = B* Σ B + Ω`.

use crate::error::{Error, Result};
use crate::linalg::{c, kron, spectral_radius, trace, unvec, vec_of, CMat, CVec};

use super::moments::{numerator, regressor_covariance, MeanDynamics, NoiseMoments};
use crate::network::NetworkModel;

/// Largest `N·M` for which the `N²M²` system is solved directly.
pub const KRONECKER_MAX_NM: usize = 64;

const MAX_DOUBLINGS: usize = 64;
const IMAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Direct LU of `I − F`.
    Kronecker,
    /// Smith doubling on `Σ = B* Σ B + Ω`.
    Doubling,
}

impl SolveMethod {
    pub fn auto(nm: usize) -> Self {
        if nm <= KRONECKER_MAX_NM {
            Self::Kronecker
        } else {
            Self::Doubling
        }
    }
}

/// Factorized steady-state operator for one `B`.
pub struct SteadyStateSolver {
    b: CMat,
    method: SolveMethod,
    lu: Option<nalgebra::LU<crate::linalg::C64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl SteadyStateSolver {
    /// Fails with [`Error::MeanSquareUnstable`] when `rho(F) = rho(B)² ≥ 1`.
    pub fn new(b: &CMat, method: SolveMethod) -> Result<Self> {
        let rho = spectral_radius(b)?;
        if rho * rho >= 1.0 {
            return Err(Error::MeanSquareUnstable { rho_f: rho * rho });
        }
        let lu = (method == SolveMethod::Kronecker).then(|| {
            let nm = b.nrows();
            let f = kron(&b.transpose(), &b.adjoint());
            (CMat::identity(nm * nm, nm * nm) - f).lu()
        });
        Ok(Self { b: b.clone(), method, lu })
    }

    pub fn method(&self) -> SolveMethod {
        self.method
    }

    /// `Σ` solving `Σ = B* Σ B + Ω`.
    pub fn sigma(&self, omega: &CMat) -> Result<CMat> {
        let nm = self.b.nrows();
        match &self.lu {
            Some(lu) => {
                let x = lu
                    .solve(&CMat::from_column_slice(nm * nm, 1, vec_of(omega).as_slice()))
                    .ok_or_else(|| Error::Numerical("I − F is singular".into()))?;
                Ok(unvec(&CVec::from_column_slice(x.as_slice()), nm))
            }
            None => doubling(&self.b, omega),
        }
    }

    /// `vec(q)* (I − F)⁻¹ vec(Ω)`, checked to be real.
    pub fn metric(&self, q: &CMat, omega: &CMat) -> Result<f64> {
        let sigma = self.sigma(omega)?;
        real_part(inner(q, &sigma))
    }
}

/// `vec(q)* vec(s)`.
fn inner(q: &CMat, s: &CMat) -> crate::linalg::C64 {
    q.iter().zip(s.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn real_part(z: crate::linalg::C64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * z.re.abs().max(f64::MIN_POSITIVE) && z.im.abs() > 1e-300 {
        return Err(Error::Numerical(format!(
            "steady-state value has imaginary part {:e} (real part {:e})",
            z.im, z.re
        )));
    }
    Ok(z.re)
}

/// `Σ_j (B*)^j Ω B^j` by repeated squaring.
fn doubling(b: &CMat, omega: &CMat) -> Result<CMat> {
    let mut x = omega.clone();
    let mut p = b.clone();
    for _ in 0..MAX_DOUBLINGS {
        let step = p.adjoint() * &x * &p;
        x += &step;
        p = &p * &p;
        if step.norm() <= f64::EPSILON * x.norm() * 1e-2 || p.norm() < 1e-300 {
            return Ok(x);
        }
    }
    Err(Error::Numerical("doubling iteration did not converge".into()))
}

/// Weighted steady-state error variance for a single weighting matrix.
pub fn steady_state_metric(md: &MeanDynamics, nm: &NoiseMoments, omega: &CMat) -> Result<f64> {
    let solver = SteadyStateSolver::new(&md.b, SolveMethod::auto(md.n * md.m))?;
    solver.metric(&numerator(md, nm), omega)
}

/// MSD and EMSE weightings `I/N` and `R_u/N`.
pub fn standard_weightings(network: &NetworkModel) -> (CMat, CMat) {
    let n = network.n_nodes();
    let nm = n * network.m_dim;
    let scale = c(1.0 / n as f64, 0.0);
    (CMat::identity(nm, nm) * scale, regressor_covariance(network) * scale)
}

pub fn network_msd(network: &NetworkModel, md: &MeanDynamics, nm: &NoiseMoments) -> Result<f64> {
    steady_state_metric(md, nm, &standard_weightings(network).0)
}

pub fn network_emse(network: &NetworkModel, md: &MeanDynamics, nm: &NoiseMoments) -> Result<f64> {
    steady_state_metric(md, nm, &standard_weightings(network).1)
}

/// `R_ζ = (1 1ᵀ) ⊗ R_η`.
pub fn random_walk_covariance(n: usize, r_eta: &CMat) -> CMat {
    kron(&CMat::from_element(n, n, c(1.0, 0.0)), r_eta)
}

/// Checks that the combination steps leave `R_ζ` unchanged,
/// `A2ᵀ A1ᵀ R_ζ A1 A2 = R_ζ`, which the tracking forms rely on.
pub fn check_random_walk_identity(md: &MeanDynamics, r_zeta: &CMat) -> Result<()> {
    let a = &md.a2t * &md.a1t;
    let mapped = &a * r_zeta * a.adjoint();
    let err = (&mapped - r_zeta).norm();
    if err > 1e-10 * r_zeta.norm().max(1.0) {
        return Err(Error::Numerical(format!(
            "combination matrices do not preserve the random-walk covariance (residual {err:e})"
        )));
    }
    Ok(())
}

/// Steady-state `(MSD, EMSE)` under a random-walk target with increment
/// covariance `r_eta`.
pub fn tracking_metrics(
    network: &NetworkModel,
    md: &MeanDynamics,
    nm: &NoiseMoments,
    r_eta: &CMat,
) -> Result<(f64, f64)> {
    let r_zeta = random_walk_covariance(md.n, r_eta);
    check_random_walk_identity(md, &r_zeta)?;
    let q = numerator(md, nm) + r_zeta;
    let solver = SteadyStateSolver::new(&md.b, SolveMethod::auto(md.n * md.m))?;
    let (w_msd, w_emse) = standard_weightings(network);
    Ok((solver.metric(&q, &w_msd)?, solver.metric(&q, &w_emse)?))
}

/// Truncated series `Σ_j Tr(B^j Q B*^j Ω)`. Stops once two consecutive terms
/// fall below `tol` times the running sum, or fails after `max_terms`.
pub fn series_metric(b: &CMat, q: &CMat, omega: &CMat, tol: f64, max_terms: usize) -> Result<f64> {
    let mut x = q.clone();
    let mut sum = 0.0;
    let mut small = 0;
    for _ in 0..max_terms {
        let term = real_part(trace(&(&x * omega)))?;
        sum += term;
        if term.abs() <= tol * sum.abs() {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        x = b * &x * b.adjoint();
    }
    Err(Error::SeriesNotConverged { terms: max_terms, partial: sum })
}

pub const SERIES_MAX_TERMS: usize = 1_000_000;

/// Series form of the network MSD. Valid without data sharing (`C = I`).
pub fn series_msd(network: &NetworkModel, md: &MeanDynamics, nm: &NoiseMoments, tol: f64) -> Result<f64> {
    series_checked(md, nm, &standard_weightings(network).0, tol)
}

pub fn series_emse(network: &NetworkModel, md: &MeanDynamics, nm: &NoiseMoments, tol: f64) -> Result<f64> {
    series_checked(md, nm, &standard_weightings(network).1, tol)
}

fn series_checked(md: &MeanDynamics, nm: &NoiseMoments, omega: &CMat, tol: f64) -> Result<f64> {
    let nmd = md.n * md.m;
    if md.ct != CMat::identity(nmd, nmd) {
        return Err(Error::Config("the series form assumes C = I".into()));
    }
    let rho = spectral_radius(&md.b)?;
    if rho >= 1.0 {
        return Err(Error::MeanUnstable { rho_b: rho });
    }
    series_metric(&md.b, &numerator(md, nm), omega, tol, SERIES_MAX_TERMS)
}
