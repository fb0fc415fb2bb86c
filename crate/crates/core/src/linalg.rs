//! Small dense helpers shared by the solvers. Everything here works on
//! `DMatrix<f64>`; the systems in this crate are at most a few modes wide.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues below this (in magnitude) are clamped to zero by [`psd_sqrt`].
pub const PSD_CLAMP_TOL: f64 = 1e-10;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.transpose()) <= tol
}

pub fn require_square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of a complex Hermitian matrix.
pub fn min_hermitian_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Iteration cap for each Schur attempt in [`eigenvalues`].
pub const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix.
///
/// The Schur iteration can stall on matrices that are a multiple of the
/// identity up to roundoff. When it does, the matrix is shifted by its mean
/// diagonal entry and rescaled before retrying.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = require_square(m, "eigenvalue input")?;
    let attempt = |x: DMatrix<f64>| {
        Schur::try_new(x, f64::EPSILON, SCHUR_MAX_ITER)
            .map(|s| s.complex_eigenvalues().iter().copied().collect::<Vec<_>>())
    };
    if let Some(e) = attempt(m.clone()) {
        return Ok(e);
    }
    let shift = m.trace() / n as f64;
    let centred = m - DMatrix::identity(n, n) * shift;
    let scale = max_abs(&centred);
    if scale == 0.0 {
        return Ok(vec![Complex64::new(shift, 0.0); n]);
    }
    attempt(centred / scale)
        .map(|e| e.iter().map(|z| z * scale + shift).collect())
        .ok_or_else(|| Error::Numerical(format!("Schur iteration did not converge for {m}")))
}

/// Largest real part among the eigenvalues of a real square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Symmetric square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-1e-10, 0)` are treated as zero; anything more negative
/// is rejected.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_square(m, "psd_sqrt input")?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_CLAMP_TOL {
        return Err(Error::NotPsd { min_eig: min });
    }
    let roots = eig.eigenvalues.map(|l| if l > 0.0 { l.sqrt() } else { 0.0 });
    let q = &eig.eigenvectors;
    let root = q * DMatrix::from_diagonal(&roots) * q.transpose();
    Ok(symmetrize(&root))
}

/// Column-major vectorisation, `vec(M)`.
pub fn vectorize(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b).trace()
}
