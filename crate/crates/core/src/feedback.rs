//! Markovian feedback `u = F y`. Gains are stored as the product `BF`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::linalg::symmetrize;
use crate::unravelling::MeasurementModel;

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackGain {
    /// 2N x 2L matrix acting on the real current `y`.
    pub bf: DMatrix<f64>,
}

impl FeedbackGain {
    pub fn new(bf: DMatrix<f64>) -> Result<Self> {
        if bf.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("feedback gain has non-finite entries".into()));
        }
        Ok(Self { bf })
    }

    pub fn zero(state_dim: usize, current_dim: usize) -> Self {
        Self {
            bf: DMatrix::zeros(state_dim, current_dim),
        }
    }
}

/// Drift and diffusion of the averaged closed-loop dynamics.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub a_prime: DMatrix<f64>,
    pub d_prime: DMatrix<f64>,
}

/// `A' = A + BF C`, `D' = D + BF BFᵀ + BF Γ + Γᵀ BFᵀ`.
pub fn closed_loop(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    gain: &FeedbackGain,
    meas: &MeasurementModel,
) -> Result<ClosedLoop> {
    let bf = &gain.bf;
    if bf.nrows() != a.nrows() || bf.ncols() != meas.c.nrows() || meas.c.ncols() != a.ncols() {
        return Err(Error::Dimension(format!(
            "gain is {}x{}, drift is {}x{}, C is {}x{}",
            bf.nrows(),
            bf.ncols(),
            a.nrows(),
            a.ncols(),
            meas.c.nrows(),
            meas.c.ncols()
        )));
    }
    let bf_gamma = bf * &meas.gamma;
    let a_prime = a + bf * &meas.c;
    let d_prime = symmetrize(&(d + bf * bf.transpose() + &bf_gamma + bf_gamma.transpose()));
    Ok(ClosedLoop { a_prime, d_prime })
}

/// `BF = -WCᵀ - Γᵀ`, the gain that cancels the innovation driving the
/// conditional mean when `W` is the conditional steady state.
pub fn optimal_gain(w: &CovarianceMatrix, meas: &MeasurementModel) -> FeedbackGain {
    FeedbackGain {
        bf: -(w.matrix() * meas.c.transpose()) - meas.gamma.transpose(),
    }
}

/// Homodyne feedback on the conjugate quadratures driven by the sum and
/// difference of the two `q` currents with strengths `λ₊`, `λ₋`.
pub fn homodyne_gain(lambda_plus: f64, lambda_minus: f64) -> FeedbackGain {
    let sum = (lambda_plus + lambda_minus) * std::f64::consts::FRAC_1_SQRT_2;
    let diff = (lambda_plus - lambda_minus) * std::f64::consts::FRAC_1_SQRT_2;
    let mut bf = DMatrix::zeros(4, 4);
    bf[(0, 0)] = sum;
    bf[(0, 1)] = diff;
    bf[(2, 0)] = diff;
    bf[(2, 1)] = sum;
    FeedbackGain { bf }
}

/// Heterodyne feedback of strength `μ` that mimics the parametric coupling.
pub fn heterodyne_gain(mu: f64) -> FeedbackGain {
    let mut bf = DMatrix::zeros(4, 4);
    bf[(0, 1)] = mu;
    bf[(1, 3)] = -mu;
    bf[(2, 0)] = mu;
    bf[(3, 2)] = -mu;
    FeedbackGain { bf }
}

/// Analytic stability window of homodyne feedback: `λ± < 1/4 ∓ χ/2`.
pub fn homodyne_stable(chi: f64, lambda_plus: f64, lambda_minus: f64) -> bool {
    lambda_plus < 0.25 - 0.5 * chi && lambda_minus < 0.25 + 0.5 * chi
}

/// Analytic stability window of heterodyne feedback: `-1/2 - χ < μ < 1/2 - χ`.
pub fn heterodyne_stable(chi: f64, mu: f64) -> bool {
    -0.5 - chi < mu && mu < 0.5 - chi
}
