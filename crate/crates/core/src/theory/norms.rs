//! Block maximum norm and the stability checks built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block, hermitian_residual, spectral_radius, CMat, CVec, ZERO};

use super::moments::{spectral_bound, MeanDynamics};

/// `max_k ‖x_k‖` over consecutive blocks of length `m`.
pub fn block_max_norm_vector(x: &CVec, m: usize) -> Result<f64> {
    if m == 0 || !x.len().is_multiple_of(m) {
        return Err(Error::Dimension(format!("length {} is not a multiple of {m}", x.len())));
    }
    Ok((0..x.len() / m).map(|k| x.rows(k * m, m).norm()).fold(0.0, f64::max))
}

/// How [`block_max_norm_matrix`] obtained its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    /// Every block is a multiple of the identity: max absolute row sum.
    Kronecker,
    /// Block diagonal: largest block spectral norm.
    BlockDiagonal,
    /// Ascent estimate, a lower bound on the true value.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockNorm {
    pub value: f64,
    /// Guaranteed upper bound, `max_l Σ_k ‖A_lk‖`. Equals `value` for the
    /// structured cases.
    pub upper: f64,
    pub method: NormMethod,
}

fn check_dims(a: &CMat, m: usize) -> Result<usize> {
    if m == 0 || !a.is_square() || !a.nrows().is_multiple_of(m) {
        return Err(Error::Dimension(format!(
            "{}x{} matrix does not split into {m}x{m} blocks",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows() / m)
}

/// Scalar `s` with `blk = s I`, if there is one.
fn scalar_block(blk: &CMat) -> Option<crate::linalg::C64> {
    let s = blk[(0, 0)];
    let tol = 1e-14 * blk.norm().max(1e-300);
    let m = blk.nrows();
    for i in 0..m {
        for j in 0..m {
            let want = if i == j { s } else { ZERO };
            if (blk[(i, j)] - want).norm() > tol {
                return None;
            }
        }
    }
    Some(s)
}

/// Norm induced by the block maximum vector norm.
pub fn block_max_norm_matrix(a: &CMat, m: usize) -> Result<BlockNorm> {
    let n = check_dims(a, m)?;
    let blocks: Vec<Vec<CMat>> = (0..n).map(|l| (0..n).map(|k| block(a, l, k, m)).collect()).collect();
    let spec = |b: &CMat| b.singular_values().max();
    let upper = blocks
        .iter()
        .map(|row| row.iter().map(&spec).sum::<f64>())
        .fold(0.0, f64::max);

    let scalars: Option<Vec<Vec<_>>> =
        blocks.iter().map(|row| row.iter().map(scalar_block).collect()).collect();
    if let Some(s) = scalars {
        let value = s.iter().map(|row| row.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max);
        return Ok(BlockNorm { value, upper: value, method: NormMethod::Kronecker });
    }

    let off_diag_zero = (0..n).all(|l| (0..n).all(|k| l == k || blocks[l][k].iter().all(|x| *x == ZERO)));
    if off_diag_zero {
        let value = (0..n).map(|k| spec(&blocks[k][k])).fold(0.0, f64::max);
        return Ok(BlockNorm { value, upper: value, method: NormMethod::BlockDiagonal });
    }

    let value = (0..n).map(|l| ascent(&blocks[l], m)).fold(0.0, f64::max);
    Ok(BlockNorm { value, upper, method: NormMethod::Estimated })
}

/// Maximizes `‖Σ_k A_lk x_k‖` over `‖x_k‖ ≤ 1` by alternating updates.
/// Each step cannot decrease the objective.
fn ascent(row: &[CMat], m: usize) -> f64 {
    let mut best = 0.0_f64;
    for start in 0..m {
        let mut y = CVec::zeros(m);
        y[start] = crate::linalg::ONE;
        let mut prev = -1.0;
        for _ in 0..500 {
            let xs: Vec<CVec> = row
                .iter()
                .map(|b| {
                    let x = b.adjoint() * &y;
                    let nx = x.norm();
                    if nx > 0.0 { x / crate::linalg::c(nx, 0.0) } else { x }
                })
                .collect();
            let mut s = CVec::zeros(m);
            for (b, x) in row.iter().zip(&xs) {
                s += b * x;
            }
            let val = s.norm();
            if val <= 0.0 {
                break;
            }
            y = s / crate::linalg::c(val, 0.0);
            if val - prev <= 1e-15 * val {
                prev = val;
                break;
            }
            prev = val;
        }
        best = best.max(prev);
    }
    best
}

/// True for block-diagonal Hermitian matrices, whose block maximum norm is
/// their spectral radius.
pub fn is_block_diagonal_hermitian(a: &CMat, m: usize) -> bool {
    let Ok(n) = check_dims(a, m) else { return false };
    hermitian_residual(a) <= 1e-12 * a.norm().max(1.0)
        && (0..n).all(|l| (0..n).all(|k| l == k || block(a, l, k, m).iter().all(|x| *x == ZERO)))
}

/// Mean stability summary of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rho_b: f64,
    /// `rho(I − M R′)`, which bounds `rho_b`.
    pub rho_spectral_bound: f64,
    /// `rho(F) = rho_b²`.
    pub rho_f: f64,
    pub mean_stable: bool,
    pub warnings: Vec<String>,
}

/// Distance from 1 below which the bias solve is flagged.
pub const ILL_CONDITIONED_GAP: f64 = 1e-6;

pub fn stability_report(md: &MeanDynamics) -> Result<StabilityReport> {
    let rho_b = spectral_radius(&md.b)?;
    let bound = spectral_bound(md);
    let mut warnings = Vec::new();
    if rho_b > bound + 1e-10 {
        warnings.push(format!(
            "rho(B) = {rho_b:.12} exceeds rho(I - M R') = {bound:.12}; combination matrices may not be stochastic"
        ));
    }
    if rho_b >= 1.0 {
        warnings.push(format!("mean-unstable: rho(B) = {rho_b:.9} >= 1"));
    } else if 1.0 - rho_b < ILL_CONDITIONED_GAP {
        warnings.push(format!("ill-conditioned: rho(B) = {rho_b:.12} is within {ILL_CONDITIONED_GAP:e} of 1"));
    }
    Ok(StabilityReport {
        rho_b,
        rho_spectral_bound: bound,
        rho_f: rho_b * rho_b,
        mean_stable: rho_b < 1.0,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, kron_identity};
    use nalgebra::DMatrix;

    #[test]
    fn vector_norm_example() {
        let x = CVec::from_vec(vec![c(3.0, 0.0), c(4.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(block_max_norm_vector(&x, 2).unwrap(), 5.0);
        assert!(block_max_norm_vector(&x, 3).is_err());
    }

    #[test]
    fn stochastic_lift_has_unit_norm() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.5, 0.3, 0.4, 0.0, 0.5, 0.6]);
        let lift = kron_identity(&a.transpose(), 2);
        let r = block_max_norm_matrix(&lift, 2).unwrap();
        assert_eq!(r.method, NormMethod::Kronecker);
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn block_diagonal_hermitian() {
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(-3.0, 0.0)]));
        let r = block_max_norm_matrix(&d, 1).unwrap();
        assert!((r.value - 3.0).abs() < 1e-14);
        assert!(is_block_diagonal_hermitian(&d, 1));
    }

    #[test]
    fn estimate_is_bracketed() {
        let a = CMat::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.1 - 0.5, (i as f64 - j as f64) * 0.2));
        let r = block_max_norm_matrix(&a, 2).unwrap();
        assert_eq!(r.method, NormMethod::Estimated);
        assert!(r.value <= r.upper + 1e-12);
        // the induced norm dominates the spectral radius
        assert!(r.value + 1e-9 >= spectral_radius(&a).unwrap());
    }
}
