//! Unconditional moment equations `dV/dt = AV + VAᵀ + D` for a plant with
//! quadratic Hamiltonian `xᵀGx/2` and linear bath coupling `c = C̃x`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{symplectic_form, CovarianceMatrix};
use crate::linalg::{self, is_symmetric, max_abs, spectral_abscissa, symmetrize};

pub const DEFAULT_HURWITZ_TOL: f64 = 1e-9;
pub const DEFAULT_MOMENT_DT: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct PlantModel {
    /// Hamiltonian quadratic form, 2N x 2N.
    pub g: DMatrix<f64>,
    /// Bath coupling, L x 2N.
    pub c_tilde: DMatrix<Complex64>,
    /// Control input matrix, 2N x M.
    pub b: DMatrix<f64>,
}

impl PlantModel {
    pub fn new(g: DMatrix<f64>, c_tilde: DMatrix<Complex64>, b: DMatrix<f64>) -> Result<Self> {
        let dim = linalg::require_square(&g, "G")?;
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Dimension(format!("G must be 2N x 2N, got {dim}")));
        }
        if !is_symmetric(&g, 1e-12) {
            return Err(Error::InvalidArgument("G is not symmetric".into()));
        }
        if c_tilde.ncols() != dim {
            return Err(Error::Dimension(format!(
                "C̃ has {} columns, expected {dim}",
                c_tilde.ncols()
            )));
        }
        if b.nrows() != dim {
            return Err(Error::Dimension(format!(
                "B has {} rows, expected {dim}",
                b.nrows()
            )));
        }
        Ok(Self { g, c_tilde, b })
    }

    pub fn n_modes(&self) -> usize {
        self.g.nrows() / 2
    }

    pub fn n_channels(&self) -> usize {
        self.c_tilde.nrows()
    }

    /// `C̃†C̃`, the 2N x 2N Hermitian coupling matrix.
    pub fn coupling_gram(&self) -> DMatrix<Complex64> {
        self.c_tilde.adjoint() * &self.c_tilde
    }

    pub fn drift_diffusion(&self) -> DriftDiffusion {
        DriftDiffusion {
            a: drift_matrix(self),
            d: diffusion_matrix(self),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DriftDiffusion {
    pub a: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// `A = Σ(G + Im[C̃†C̃])`.
pub fn drift_matrix(plant: &PlantModel) -> DMatrix<f64> {
    let sigma = symplectic_form(plant.n_modes());
    let im = plant.coupling_gram().map(|z| z.im);
    sigma * (&plant.g + im)
}

/// `D = Σ Re[C̃†C̃] Σᵀ`.
pub fn diffusion_matrix(plant: &PlantModel) -> DMatrix<f64> {
    let sigma = symplectic_form(plant.n_modes());
    let re = plant.coupling_gram().map(|z| z.re);
    symmetrize(&(&sigma * re * sigma.transpose()))
}

pub fn is_hurwitz(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square() && spectral_abscissa(a).is_ok_and(|s| s < -tol)
}

/// Steady state of `dV/dt = AV + VAᵀ + D`, solved as the Kronecker-sum
/// system `(I⊗A + A⊗I) vec V = -vec D`.
pub fn lyapunov_steady(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    let n = linalg::require_square(a, "A")?;
    if d.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "D is {}x{}, expected {n}x{n}",
            d.nrows(),
            d.ncols()
        )));
    }
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= -DEFAULT_HURWITZ_TOL {
        return Err(Error::NotHurwitz { abscissa });
    }
    let id = DMatrix::<f64>::identity(n, n);
    let kron_sum = id.kronecker(a) + a.kronecker(&id);
    let rhs = -linalg::vectorize(d);
    let sol: DVector<f64> = kron_sum
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Kronecker-sum system".into()))?;
    let v = symmetrize(&DMatrix::from_column_slice(n, n, sol.as_slice()));
    let residual = max_abs(&lyapunov_residual(a, d, &v));
    let scale = max_abs(d).max(max_abs(a) * max_abs(&v));
    if residual > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:e} too large"
        )));
    }
    CovarianceMatrix::new(v)
}

pub fn lyapunov_residual(a: &DMatrix<f64>, d: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    a * v + v * a.transpose() + d
}

/// Fixed-step RK4 integration of the moment equation from `v0` to `t_final`.
/// The step is shrunk slightly so that an integer number of steps lands on
/// `t_final`.
pub fn integrate_moments(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v0: &CovarianceMatrix,
    dt: f64,
    t_final: f64,
) -> Result<CovarianceMatrix> {
    if !(dt > 0.0 && t_final > 0.0 && dt <= t_final) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= t_final, got dt = {dt}, t_final = {t_final}"
        )));
    }
    let n = linalg::require_square(a, "A")?;
    if d.shape() != (n, n) || v0.matrix().nrows() != n {
        return Err(Error::Dimension("A, D and V0 must share a size".into()));
    }
    let steps = (t_final / dt).ceil() as usize;
    let h = t_final / steps as f64;
    let rhs = |v: &DMatrix<f64>| lyapunov_residual(a, d, v);
    let mut v = v0.matrix().clone();
    for k in 0..steps {
        v = symmetrize(&rk4_step(&rhs, &v, h));
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                t: (k + 1) as f64 * h,
            });
        }
    }
    CovarianceMatrix::new(v)
}

pub(crate) fn rk4_step<F>(f: &F, v: &DMatrix<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let k1 = f(v);
    let k2 = f(&(v + &k1 * (0.5 * h)));
    let k3 = f(&(v + &k2 * (0.5 * h)));
    let k4 = f(&(v + &k3 * h));
    v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}
