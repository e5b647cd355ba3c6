//! Dense complex linear-algebra helpers shared by the model, the simulator and
//! the steady-state analysis.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

const SCHUR_MAX_ITER: usize = 20_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entrywise modulus of `m - m*`.
pub fn hermitian_residual(m: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m*) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), order.len(), |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn lambda_max_hermitian(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    *hermitian_eigen(m).0.last().unwrap()
}

/// PSD check with an eigenvalue floor of `-1e-10 * max(lambda_max, 1)`.
pub fn is_psd(m: &CMat) -> bool {
    if m.is_empty() {
        return true;
    }
    let (values, _) = hermitian_eigen(m);
    let top = values.last().copied().unwrap_or(0.0).max(1.0);
    values[0] >= -1e-10 * top
}

/// A factor `L` with `L L* = m` for Hermitian PSD `m`; negative rounding
/// eigenvalues are clipped to zero.
pub fn psd_factor(m: &CMat) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let mut l = vectors;
    for (j, &lam) in values.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().copied().sum()
}

pub fn is_zero(m: &CMat) -> bool {
    m.iter().all(|z| *z == ZERO)
}

/// Kronecker lift `A ⊗ I_M` of a real `N×N` matrix.
pub fn kron_identity(a: &DMatrix<f64>, m: usize) -> CMat {
    let n = a.nrows();
    let mut out = CMat::zeros(n * m, a.ncols() * m);
    for i in 0..n {
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if v != 0.0 {
                for d in 0..m {
                    out[(i * m + d, j * m + d)] = c(v, 0.0);
                }
            }
        }
    }
    out
}

/// General Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(total, total);
    let mut at = 0;
    for b in blocks {
        let m = b.nrows();
        out.view_mut((at, at), (m, m)).copy_from(b);
        at += m;
    }
    out
}

pub fn block(m: &CMat, row: usize, col: usize, size: usize) -> CMat {
    m.view((row * size, col * size), (size, size)).into_owned()
}

/// Column-stacking vectorisation.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVec, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}

/// Spectral radius of a square complex matrix.
///
/// Complex input is mapped to the real embedding `[[Re, -Im], [Im, Re]]`,
/// whose spectrum is `spec(m) ∪ conj(spec(m))`, and handed to the real
/// Francis QR iteration.
pub fn spectral_radius(m: &CMat) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let real = m.iter().all(|z| z.im == 0.0);
    let embedded = if real {
        m.map(|z| z.re)
    } else {
        DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
            let z = m[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
    };
    // Repeated eigenvalues (Kronecker-structured inputs) can keep the QR
    // iteration from deflating at machine precision; loosen gradually.
    let schur = [f64::EPSILON, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10]
        .into_iter()
        .find_map(|eps| Schur::try_new(embedded.clone(), eps, SCHUR_MAX_ITER))
        .ok_or_else(|| Error::Numerical(format!("eigenvalue iteration did not converge ({n}x{n})")))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: CMat, b: &CMat) -> Result<CMat> {
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular linear system".into()))
}

/// Parses a row-major list of `[re, im]` pairs into an `m×m` matrix.
pub fn matrix_from_pairs(pairs: &[[f64; 2]], m: usize) -> Option<CMat> {
    (pairs.len() == m * m).then(|| CMat::from_fn(m, m, |i, j| {
        let [re, im] = pairs[i * m + j];
        c(re, im)
    }))
}

pub fn matrix_to_pairs(mat: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(mat.len());
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            let z = mat[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_factor_reconstructs() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let l = psd_factor(&m);
        assert!(max_abs_diff(&(&l * l.adjoint()), &m) < 1e-12);
        assert!(is_psd(&m));
    }

    #[test]
    fn indefinite_rejected() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1e-6, 0.0)]);
        assert!(!is_psd(&m));
        let tiny = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1e-12, 0.0)]);
        assert!(is_psd(&tiny));
    }

    #[test]
    fn spectral_radius_of_rotation_and_complex_diag() {
        let rot = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-2.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert!((spectral_radius(&rot).unwrap() - 2.0).abs() < 1e-12);
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(0.3, 0.4), c(0.1, 0.0)]));
        assert!((spectral_radius(&d).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vec_identity_matches_kronecker() {
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let a = CMat::from_fn(3, 3, |i, j| c(i as f64 - j as f64, 0.5 * j as f64));
        let x = CMat::from_fn(3, 3, |i, j| c((i * j) as f64, 1.0 - i as f64));
        let b = CMat::from_fn(3, 3, |i, j| c(1.0 + i as f64, j as f64 * 0.25));
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn lift_places_identity_blocks() {
        let a = DMatrix::from_row_slice(2, 2, &[0.25, 0.75, 1.0, 0.0]);
        let lifted = kron_identity(&a, 2);
        assert_eq!(lifted[(0, 2)], c(0.75, 0.0));
        assert_eq!(lifted[(1, 3)], c(0.75, 0.0));
        assert_eq!(lifted[(0, 3)], ZERO);
    }
}
