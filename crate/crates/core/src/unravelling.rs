//! Measurement unravellings of the bath and the conditional (filtered)
//! covariance they induce.
//!
//! An unravelling is a complex symmetric `Υ` with `dz dzᵀ = Υ dt`; its real
//! form `U = ½[[I+ReΥ, ImΥ], [ImΥ, I-ReΥ]]` must be positive semidefinite.
//! Detection is assumed efficient, `dz dz† = I dt`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::{self, is_hurwitz, lyapunov_steady, PlantModel, DEFAULT_HURWITZ_TOL};
use crate::error::{Error, Result};
use crate::gaussian::{symplectic_form, uncertainty_margin, CovarianceMatrix};
use crate::linalg::{max_abs, min_eigenvalue, psd_sqrt, symmetrize};

/// PSD tolerance on the unravelling matrix.
pub const U_PSD_TOL: f64 = 1e-9;
/// Riccati relaxation stops once `max |dV/dt|` falls below this.
pub const RICCATI_RATE_TOL: f64 = 1e-12;
/// Maximum algebraic Riccati residual accepted after relaxation.
pub const RICCATI_RESIDUAL_TOL: f64 = 1e-9;
pub const RICCATI_MAX_STEPS: usize = 10_000_000;
pub const RICCATI_RELAX_DT: f64 = 0.02;
/// Residual threshold for a recovered unravelling.
pub const RECOVERY_TOL: f64 = 1e-8;
/// Singular values below this are dropped when solving for `U`.
pub const RECOVERY_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Unravelling {
    upsilon: DMatrix<Complex64>,
    u: DMatrix<f64>,
}

impl Unravelling {
    pub fn new(upsilon: DMatrix<Complex64>) -> Result<Self> {
        let u = u_matrix(&upsilon)?;
        Ok(Self { upsilon, u })
    }

    /// `Υ = I`: homodyne detection of the `q`-like quadrature of each channel.
    pub fn homodyne(channels: usize) -> Self {
        Self::new(DMatrix::identity(channels, channels)).expect("identity is a valid unravelling")
    }

    /// `Υ = 0`: heterodyne detection of every channel.
    pub fn heterodyne(channels: usize) -> Self {
        Self::new(DMatrix::zeros(channels, channels)).expect("zero is a valid unravelling")
    }

    /// Reads `Υ` back from a real unravelling matrix of the block form.
    pub fn from_u_matrix(u: &DMatrix<f64>) -> Result<Self> {
        let n = u.nrows();
        if !u.is_square() || !n.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "unravelling matrix must be 2L x 2L, got {}x{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let l = n / 2;
        let upsilon = DMatrix::from_fn(l, l, |i, j| {
            let re = u[(i, j)] - u[(i + l, j + l)];
            let im = u[(i, j + l)] + u[(i + l, j)];
            Complex64::new(re, im)
        });
        let upsilon = (&upsilon + upsilon.transpose()) * Complex64::new(0.5, 0.0);
        Self::new(upsilon)
    }

    pub fn upsilon(&self) -> &DMatrix<Complex64> {
        &self.upsilon
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn channels(&self) -> usize {
        self.upsilon.nrows()
    }
}

/// Real unravelling matrix built from `Υ`; errors if it is indefinite.
pub fn u_matrix(upsilon: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    if !upsilon.is_square() {
        return Err(Error::Dimension("Υ must be square".into()));
    }
    let asym = (upsilon - upsilon.transpose()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if asym > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "Υ is not symmetric (deviation {asym:e})"
        )));
    }
    let l = upsilon.nrows();
    let mut u = DMatrix::zeros(2 * l, 2 * l);
    for i in 0..l {
        for j in 0..l {
            let z = upsilon[(i, j)];
            let delta = if i == j { 1.0 } else { 0.0 };
            u[(i, j)] = 0.5 * (delta + z.re);
            u[(i + l, j + l)] = 0.5 * (delta - z.re);
            u[(i, j + l)] = 0.5 * z.im;
            u[(i + l, j)] = 0.5 * z.im;
        }
    }
    let u = symmetrize(&u);
    let min_eig = min_eigenvalue(&u);
    if min_eig < -U_PSD_TOL {
        return Err(Error::InvalidUnravelling { min_eig });
    }
    Ok(u)
}

/// `C̄`: real part of `C̃` stacked over its imaginary part.
pub fn cbar(c_tilde: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (l, n) = c_tilde.shape();
    DMatrix::from_fn(2 * l, n, |i, j| {
        if i < l {
            c_tilde[(i, j)].re
        } else {
            c_tilde[(i - l, j)].im
        }
    })
}

/// `S = [[0, I], [-I, 0]]` on the 2L-dimensional current space.
pub fn exchange_matrix(channels: usize) -> DMatrix<f64> {
    let l = channels;
    let mut s = DMatrix::zeros(2 * l, 2 * l);
    for i in 0..l {
        s[(i, i + l)] = 1.0;
        s[(i + l, i)] = -1.0;
    }
    s
}

/// Real currents `y = C⟨x⟩ + dw/dt` with `C = 2U^{1/2}C̄` and the
/// cross-correlation `Γ = -U^{1/2}SC̄Σᵀ` between measurement and process noise.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    pub c: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub u_sqrt: DMatrix<f64>,
    pub cbar: DMatrix<f64>,
}

pub fn measurement_model(plant: &PlantModel, u: &Unravelling) -> Result<MeasurementModel> {
    if u.channels() != plant.n_channels() {
        return Err(Error::Dimension(format!(
            "unravelling has {} channels, plant has {}",
            u.channels(),
            plant.n_channels()
        )));
    }
    let cb = cbar(&plant.c_tilde);
    let u_sqrt = psd_sqrt(u.u())?;
    let s = exchange_matrix(u.channels());
    let sigma = symplectic_form(plant.n_modes());
    let c = &u_sqrt * &cb * 2.0;
    let gamma = -(&u_sqrt * s * &cb * sigma.transpose());
    Ok(MeasurementModel {
        c,
        gamma,
        u_sqrt,
        cbar: cb,
    })
}

/// Right-hand side of the conditional covariance equation,
/// `AV + VAᵀ + D - (VCᵀ+Γᵀ)(CV+Γ)`.
pub fn riccati_rhs(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    meas: &MeasurementModel,
    v: &DMatrix<f64>,
) -> DMatrix<f64> {
    let k = innovation_gain(meas, v);
    a * v + v * a.transpose() + d - &k * k.transpose()
}

/// `VCᵀ + Γᵀ`, the gain multiplying the innovation `dw`.
pub fn innovation_gain(meas: &MeasurementModel, v: &DMatrix<f64>) -> DMatrix<f64> {
    v * meas.c.transpose() + meas.gamma.transpose()
}

/// Hamiltonian drift of the algebraic Riccati form, `Ω = Σ[G + C̄ᵀS(I-2U)C̄]`,
/// which equals `A - ΓᵀC`.
pub fn hamiltonian_drift(plant: &PlantModel, u: &Unravelling) -> DMatrix<f64> {
    let cb = cbar(&plant.c_tilde);
    let l = u.channels();
    let s = exchange_matrix(l);
    let sigma = symplectic_form(plant.n_modes());
    let shift = DMatrix::<f64>::identity(2 * l, 2 * l) - u.u() * 2.0;
    sigma * (&plant.g + cb.transpose() * s * shift * &cb)
}

/// Residual of `ΩW + WΩᵀ - WCᵀCW + EEᵀ` with `E = ΣCᵀ/2`.
pub fn algebraic_riccati_residual(
    plant: &PlantModel,
    u: &Unravelling,
    meas: &MeasurementModel,
    w: &DMatrix<f64>,
) -> DMatrix<f64> {
    let omega = hamiltonian_drift(plant, u);
    let e = symplectic_form(plant.n_modes()) * meas.c.transpose() * 0.5;
    let wc = w * meas.c.transpose();
    &omega * w + w * omega.transpose() - &wc * wc.transpose() + &e * e.transpose()
}

/// Stabilizing steady-state conditional covariance `W_U`, found by relaxing
/// the conditional covariance ODE from the unconditional steady state.
pub fn riccati_steady(plant: &PlantModel, u: &Unravelling) -> Result<CovarianceMatrix> {
    let meas = measurement_model(plant, u)?;
    let dd = plant.drift_diffusion();
    let n = plant.g.nrows();
    let mut v = if is_hurwitz(&dd.a, DEFAULT_HURWITZ_TOL) {
        lyapunov_steady(&dd.a, &dd.d)?.into_matrix()
    } else {
        DMatrix::identity(n, n) * 0.5
    };
    let rhs = |v: &DMatrix<f64>| riccati_rhs(&dd.a, &dd.d, &meas, v);
    let mut rate = max_abs(&rhs(&v));
    let mut steps = 0;
    while rate > RICCATI_RATE_TOL {
        if steps >= RICCATI_MAX_STEPS || !rate.is_finite() {
            return Err(Error::NoStabilizingSolution { steps, rate });
        }
        v = symmetrize(&dynamics::rk4_step(&rhs, &v, RICCATI_RELAX_DT));
        rate = max_abs(&rhs(&v));
        steps += 1;
    }
    let residual = max_abs(&algebraic_riccati_residual(plant, u, &meas, &v));
    if residual > RICCATI_RESIDUAL_TOL {
        return Err(Error::RiccatiInconsistent { residual });
    }
    log::debug!("Riccati relaxation converged in {steps} steps");
    CovarianceMatrix::new(v)
}

/// Outcome of the two conditional-state LMIs, `W + iΣ/2 ≥ 0` and
/// `D + AW + WAᵀ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmiReport {
    pub feasible: bool,
    pub physical_margin: f64,
    pub dynamical_margin: f64,
}

pub fn lmi_feasible(w: &CovarianceMatrix, plant: &PlantModel, tol: f64) -> Result<LmiReport> {
    if w.matrix().nrows() != plant.g.nrows() {
        return Err(Error::Dimension("W and plant sizes differ".into()));
    }
    let dd = plant.drift_diffusion();
    let physical_margin = uncertainty_margin(w);
    let dynamical_margin = min_eigenvalue(&dynamical_lmi_matrix(&dd.a, &dd.d, w.matrix()));
    Ok(LmiReport {
        feasible: physical_margin >= -tol && dynamical_margin >= -tol,
        physical_margin,
        dynamical_margin,
    })
}

fn dynamical_lmi_matrix(a: &DMatrix<f64>, d: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(d + a * w + w * a.transpose()))
}

#[derive(Clone, Debug)]
pub struct UnravellingRecovery {
    pub unravelling: Unravelling,
    /// `max |RᵀUR - (D + AW + WAᵀ)|`.
    pub residual: f64,
}

/// Finds an unravelling whose conditional steady state is `w` by solving
/// `RᵀUR = D + AW + WAᵀ` with `R = 2C̄W + SC̄Σ`.
///
/// The unknowns are the real and imaginary parts of `Υ`, so every candidate
/// already has the block structure of an unravelling matrix; the
/// minimum-norm least-squares solution is taken when `R` is rank deficient.
pub fn recover_unravelling(w: &CovarianceMatrix, plant: &PlantModel) -> Result<UnravellingRecovery> {
    let lmi = lmi_feasible(w, plant, RECOVERY_TOL)?;
    if !lmi.feasible {
        return Err(Error::LmiInfeasible {
            physical: lmi.physical_margin,
            dynamical: lmi.dynamical_margin,
        });
    }
    let dd = plant.drift_diffusion();
    let l = plant.n_channels();
    let cb = cbar(&plant.c_tilde);
    let s = exchange_matrix(l);
    let sigma = symplectic_form(plant.n_modes());
    let r = &cb * w.matrix() * 2.0 + &s * &cb * &sigma;
    let target = dynamical_lmi_matrix(&dd.a, &dd.d, w.matrix());

    let basis = unravelling_basis(l);
    let rows = target.len();
    let mut design = DMatrix::zeros(rows, basis.len());
    for (k, b) in basis.iter().enumerate() {
        let image = r.transpose() * b * &r;
        design.column_mut(k).copy_from_slice(image.as_slice());
    }
    let offset = DMatrix::<f64>::identity(2 * l, 2 * l) * 0.5;
    let rhs_mat = &target - r.transpose() * &offset * &r;
    let rhs = DVector::from_column_slice(rhs_mat.as_slice());
    let svd = design.svd(true, true);
    let coeffs = svd
        .solve(&rhs, RECOVERY_RANK_TOL)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;

    let mut u = offset;
    for (c, b) in coeffs.iter().zip(&basis) {
        u += b * *c;
    }
    let u = symmetrize(&u);
    let residual = max_abs(&(r.transpose() * &u * &r - &target));
    if residual > RECOVERY_TOL {
        return Err(Error::RecoveryFailed { residual });
    }
    let min_eig = min_eigenvalue(&u);
    if min_eig < -U_PSD_TOL {
        return Err(Error::InvalidUnravelling { min_eig });
    }
    Ok(UnravellingRecovery {
        unravelling: Unravelling::from_u_matrix(&u)?,
        residual,
    })
}

/// Directions in U-space generated by the independent entries of `ReΥ` and
/// `ImΥ`.
fn unravelling_basis(l: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::with_capacity(l * (l + 1));
    for imaginary in [false, true] {
        for i in 0..l {
            for j in i..l {
                let mut b = DMatrix::zeros(2 * l, 2 * l);
                let mut put = |r: usize, c: usize, v: f64| {
                    b[(r, c)] = v;
                    b[(c, r)] = v;
                };
                if imaginary {
                    put(i, j + l, 0.5);
                    put(j, i + l, 0.5);
                } else {
                    put(i, j, 0.5);
                    put(i + l, j + l, -0.5);
                }
                basis.push(b);
            }
        }
    }
    basis
}
