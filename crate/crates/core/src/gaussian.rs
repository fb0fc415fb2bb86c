//! Phase-space primitives for Gaussian states.
//!
//! Quadratures are ordered `(q1, p1, q2, p2, ...)` with `[q, p] = i`, so the
//! vacuum has covariance `I/2`. Entanglement and entropy are reported in bits.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, eigenvalues, max_abs_diff, min_hermitian_eigenvalue, symmetrize};

/// Tolerance used when pairing the moduli of the eigenvalues of `ΣV`.
pub const PAIRING_TOL: f64 = 1e-8;
/// Symplectic eigenvalues this far below 1/2 are clamped onto the bound.
pub const PURITY_CLAMP: f64 = 1e-9;

/// Direct sum of `n_modes` copies of `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        s[(2 * k, 2 * k + 1)] = 1.0;
        s[(2 * k + 1, 2 * k)] = -1.0;
    }
    s
}

/// Symmetric matrix of quadrature second moments.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    data: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps `data`, symmetrizing it. Fails unless `data` is square with even,
    /// nonzero dimension and finite entries.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let dim = linalg::require_square(&data, "covariance matrix")?;
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Dimension(format!(
                "covariance dimension must be even and nonzero, got {dim}"
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite covariance entry".into()));
        }
        Ok(Self {
            data: symmetrize(&data),
        })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            data: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }
}

/// The 2x2 blocks of a two-mode covariance, `[[gamma1, sigma], [sigmaᵀ, gamma2]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeBlocks {
    pub gamma1: Matrix2<f64>,
    pub gamma2: Matrix2<f64>,
    pub sigma: Matrix2<f64>,
}

impl TwoModeBlocks {
    pub fn assemble(&self) -> CovarianceMatrix {
        let mut m = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = self.gamma1[(i, j)];
                m[(i + 2, j + 2)] = self.gamma2[(i, j)];
                m[(i, j + 2)] = self.sigma[(i, j)];
                m[(j + 2, i)] = self.sigma[(i, j)];
            }
        }
        CovarianceMatrix { data: m }
    }

    /// Builds the symmetric family `gamma1 = gamma2 = diag(g_q, g_p)`,
    /// `sigma = diag(s_q, s_p)` that every steady state of the parametric
    /// oscillator belongs to.
    pub fn symmetric(g_q: f64, g_p: f64, s_q: f64, s_p: f64) -> Self {
        let gamma = Matrix2::new(g_q, 0.0, 0.0, g_p);
        Self {
            gamma1: gamma,
            gamma2: gamma,
            sigma: Matrix2::new(s_q, 0.0, 0.0, s_p),
        }
    }
}

pub fn two_mode_blocks(v: &CovarianceMatrix) -> Result<TwoModeBlocks> {
    require_two_modes(v)?;
    let m = v.matrix();
    let block = |r: usize, c: usize| {
        Matrix2::new(m[(r, c)], m[(r, c + 1)], m[(r + 1, c)], m[(r + 1, c + 1)])
    };
    Ok(TwoModeBlocks {
        gamma1: block(0, 0),
        gamma2: block(2, 2),
        sigma: block(0, 2),
    })
}

fn require_two_modes(v: &CovarianceMatrix) -> Result<()> {
    if v.n_modes() == 2 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "two-mode quantity requested for a {}-mode state",
            v.n_modes()
        )))
    }
}

/// Smallest eigenvalue of the Hermitian matrix `V + iΣ/2`. Nonnegative
/// exactly for physical states.
pub fn uncertainty_margin(v: &CovarianceMatrix) -> f64 {
    let n = v.matrix().nrows();
    let sigma = symplectic_form(v.n_modes());
    let h = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(v.matrix()[(i, j)], 0.5 * sigma[(i, j)])
    });
    min_hermitian_eigenvalue(&h)
}

pub fn is_physical(v: &CovarianceMatrix, tol: f64) -> bool {
    uncertainty_margin(v) >= -tol
}

/// Williamson spectrum, descending, one value per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticSpectrum {
    pub values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Moduli of the eigenvalues of `iΣV`, which come in `±ν` pairs.
pub fn symplectic_eigenvalues(v: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    let sigma = symplectic_form(v.n_modes());
    let mut moduli: Vec<f64> = eigenvalues(&(sigma * v.matrix()))?
        .iter()
        .map(|z| z.norm())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let mut values = Vec::with_capacity(v.n_modes());
    for pair in moduli.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        if (a - b).abs() > PAIRING_TOL * a.max(1.0) {
            return Err(Error::Numerical(format!(
                "symplectic spectrum not paired: {a} vs {b}"
            )));
        }
        values.push(0.5 * (a + b));
    }
    Ok(SymplecticSpectrum { values })
}

/// Reflects the momentum of `mode` (Simon's partial transpose).
pub fn partial_transpose(v: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
    if mode >= v.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "mode {mode} out of range for a {}-mode state",
            v.n_modes()
        )));
    }
    let mut m = v.matrix().clone();
    let p = 2 * mode + 1;
    for k in 0..m.nrows() {
        if k != p {
            m[(p, k)] = -m[(p, k)];
            m[(k, p)] = -m[(k, p)];
        }
    }
    Ok(CovarianceMatrix { data: m })
}

/// Logarithmic negativity in bits, `max(0, -log2(2 ν̃₋))` with `ν̃₋` the
/// smallest symplectic eigenvalue of the partially transposed state.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<f64> {
    require_two_modes(v)?;
    let pt = partial_transpose(v, 1)?;
    let nu = symplectic_eigenvalues(&pt)?.min();
    Ok((-(2.0 * nu).log2()).max(0.0))
}

/// `g(x) = (x+1/2)log2(x+1/2) - (x-1/2)log2(x-1/2)`, with `g(1/2) = 0`.
pub fn entropy_function(x: f64) -> Result<f64> {
    if x < 0.5 - PURITY_CLAMP {
        return Err(Error::Unphysical(format!(
            "symplectic eigenvalue {x} below 1/2"
        )));
    }
    let x = x.max(0.5);
    let lower = x - 0.5;
    let lower_term = if lower > 0.0 { lower * lower.log2() } else { 0.0 };
    Ok((x + 0.5) * (x + 0.5).log2() - lower_term)
}

pub fn von_neumann_entropy(v: &CovarianceMatrix) -> Result<f64> {
    symplectic_eigenvalues(v)?
        .values
        .iter()
        .try_fold(0.0, |acc, &nu| Ok(acc + entropy_function(nu)?))
}

/// Variance of `x1(θ) + x2(π-θ)` where `x_j(θ) = cos θ q_j + sin θ p_j`.
pub fn epr_variance(v: &CovarianceMatrix, theta: f64) -> Result<f64> {
    require_two_modes(v)?;
    let (s, c) = theta.sin_cos();
    let w = nalgebra::DVector::from_vec(vec![c, s, -c, s]);
    Ok((w.transpose() * v.matrix() * &w)[(0, 0)])
}

/// Symplectic invariants of a two-mode state from its block determinants:
/// `(ν₊, ν₋, ν̃₋)`. Only meaningful for states with `gamma1 = gamma2`.
pub fn symmetric_family_invariants(blocks: &TwoModeBlocks) -> (f64, f64, f64) {
    let det_v = blocks.assemble().matrix().determinant();
    let dg = blocks.gamma1.determinant();
    let ds = blocks.sigma.determinant();
    let spread = |delta: f64| (delta * delta - det_v).max(0.0).sqrt();
    let plus = dg + ds;
    let minus = dg - ds;
    (
        (plus + spread(plus)).sqrt(),
        (plus - spread(plus)).max(0.0).sqrt(),
        (minus - spread(minus)).max(0.0).sqrt(),
    )
}

/// True when `a` and `b` agree entrywise within `tol`.
pub fn covariances_close(a: &CovarianceMatrix, b: &CovarianceMatrix, tol: f64) -> bool {
    a.matrix().shape() == b.matrix().shape() && max_abs_diff(a.matrix(), b.matrix()) <= tol
}
