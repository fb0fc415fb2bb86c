use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unphysical covariance: {0}")]
    Unphysical(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },

    #[error("moment integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("invalid unravelling: U has min eigenvalue {min_eig:e}")]
    InvalidUnravelling { min_eig: f64 },

    #[error("no stabilizing Riccati solution after {steps} relaxation steps (|dV/dt| = {rate:e})")]
    NoStabilizingSolution { steps: usize, rate: f64 },

    #[error("Riccati solution inconsistent: algebraic residual {residual:e}")]
    RiccatiInconsistent { residual: f64 },

    #[error("covariance violates the conditional-state LMIs (margins {physical:e}, {dynamical:e})")]
    LmiInfeasible { physical: f64, dynamical: f64 },

    #[error("unravelling recovery failed: residual {residual:e}")]
    RecoveryFailed { residual: f64 },

    #[error("parameters outside the stability window: {0}")]
    Unstable(String),

    #[error("coupling chi = {0} outside [0, 1/2 - 1e-6]")]
    ChiOutOfRange(f64),

    #[error("optimality check failed: {0}")]
    OptimalityViolation(String),

    #[error("trajectory {index} diverged at t = {t}")]
    TrajectoryDivergence { index: usize, t: f64 },
}
