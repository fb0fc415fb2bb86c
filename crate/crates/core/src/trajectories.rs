//! Monte-Carlo integration of the conditional moment equations under
//! measurement and Markovian feedback.
//!
//! `V_c` obeys a deterministic ODE and is integrated once by RK4. Each
//! trajectory then integrates the conditional mean by Euler-Maruyama,
//!
//! ```text
//! d⟨x⟩ = (A⟨x⟩ + BF y) dt + (V_c Cᵀ + Γᵀ) dw,    y dt = C⟨x⟩ dt + dw,
//! ```
//!
//! with its own ChaCha stream selected by the trajectory index.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{self, lyapunov_steady, PlantModel};
use crate::error::{Error, Result};
use crate::feedback::{closed_loop, FeedbackGain};
use crate::gaussian::CovarianceMatrix;
use crate::linalg::{psd_sqrt, spectral_abscissa, symmetrize, trace_product};
use crate::unravelling::{innovation_gain, measurement_model, riccati_rhs, riccati_steady, Unravelling};

pub const MAX_DT: f64 = 1e-2;
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Initial conditional state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StartState {
    /// `V_c(0) = W` and `⟨x⟩(0)` drawn from `N(0, V' - W)`, with `V'` the
    /// closed-loop unconditional steady state.
    #[default]
    Stationary,
    /// `V_c(0)` equal to the open-loop steady state and `⟨x⟩(0) = 0`.
    OpenLoop,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Fraction of the run discarded before averaging.
    pub burn_in: f64,
    pub start: StartState,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 20.0,
            n_traj: 1000,
            seed: 0,
            burn_in: 0.5,
            start: StartState::Stationary,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidArgument(format!(
                "dt must lie in (0, {MAX_DT}], got {}",
                self.dt
            )));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::InvalidArgument(format!(
                "t_final must be finite and at least dt, got {}",
                self.t_final
            )));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidArgument("n_traj must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidArgument(format!(
                "burn_in must lie in [0, 1), got {}",
                self.burn_in
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }

    /// Number of leading steps excluded from the averages.
    pub fn burn_in_steps(&self) -> usize {
        let n = self.n_steps();
        ((self.burn_in * n as f64).floor() as usize).min(n - 1)
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryStats {
    pub v_c_final: CovarianceMatrix,
    /// Ensemble mean of the time-averaged `⟨x⟩⟨x⟩ᵀ`.
    pub mean_outer: DMatrix<f64>,
    /// `v_c_final + mean_outer`.
    pub v_unconditional: DMatrix<f64>,
    /// Ensemble mean of the time-averaged `⟨x⟩`.
    pub mean_state: DVector<f64>,
    pub n_steps: usize,
    pub n_averaged: usize,
    /// Time-averaged `⟨x⟩⟨x⟩ᵀ` of each trajectory, in trajectory order.
    pub outer_by_traj: Vec<DMatrix<f64>>,
    /// Time-averaged `⟨x⟩` of each trajectory, in trajectory order.
    pub state_by_traj: Vec<DVector<f64>>,
}

impl TrajectoryStats {
    pub fn n_traj(&self) -> usize {
        self.outer_by_traj.len()
    }

    /// Standard error across trajectories of each entry of `mean_outer`.
    /// NaN for a single trajectory.
    pub fn mean_outer_standard_error(&self) -> DMatrix<f64> {
        let n = self.mean_outer.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            standard_error(self.outer_by_traj.iter().map(|m| m[(i, j)]))
        })
    }

    /// Standard error across trajectories of each entry of `mean_state`.
    pub fn mean_state_standard_error(&self) -> DVector<f64> {
        DVector::from_fn(self.mean_state.len(), |i, _| {
            standard_error(self.state_by_traj.iter().map(|x| x[i]))
        })
    }

    /// `V_c` is deterministic, so the unconditional covariance inherits the
    /// error of `mean_outer`.
    pub fn v_unconditional_standard_error(&self) -> DMatrix<f64> {
        self.mean_outer_standard_error()
    }
}

fn standard_error(samples: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = samples.clone().count();
    if n < 2 {
        return f64::NAN;
    }
    let mean = samples.clone().sum::<f64>() / n as f64;
    let var = samples.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

struct Accumulated {
    outer: DMatrix<f64>,
    state: DVector<f64>,
}

pub fn simulate_conditional(
    plant: &PlantModel,
    u: &Unravelling,
    gain: &FeedbackGain,
    cfg: &SimConfig,
) -> Result<TrajectoryStats> {
    cfg.validate()?;
    let meas = measurement_model(plant, u)?;
    let dd = plant.drift_diffusion();
    let n = dd.a.nrows();
    let m = meas.c.nrows();
    let cl = closed_loop(&dd.a, &dd.d, gain, &meas)?;
    let abscissa = spectral_abscissa(&cl.a_prime)?;
    if abscissa >= -dynamics::DEFAULT_HURWITZ_TOL {
        return Err(Error::Unstable(format!(
            "closed-loop spectral abscissa {abscissa:e}"
        )));
    }
    if cfg.t_final < 10.0 / -abscissa {
        log::warn!(
            "t_final = {} is shorter than ten closed-loop time constants ({})",
            cfg.t_final,
            10.0 / -abscissa
        );
    }

    let (v0, x0_sqrt) = match cfg.start {
        StartState::Stationary => {
            let w = riccati_steady(plant, u)?.into_matrix();
            let v_cl = lyapunov_steady(&cl.a_prime, &cl.d_prime)?.into_matrix();
            let spread = psd_sqrt(&symmetrize(&(v_cl - &w)))?;
            (w, Some(spread))
        }
        StartState::OpenLoop => (lyapunov_steady(&dd.a, &dd.d)?.into_matrix(), None),
    };

    let n_steps = cfg.n_steps();
    let n_burn = cfg.burn_in_steps();
    let n_averaged = n_steps - n_burn;
    let dt = cfg.dt;

    // Noise loadings K_t + BF, evaluated at the left end of each step.
    let rhs = |v: &DMatrix<f64>| riccati_rhs(&dd.a, &dd.d, &meas, v);
    let mut v = v0;
    let mut loadings = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        loadings.push(innovation_gain(&meas, &v) + &gain.bf);
        v = symmetrize(&dynamics::rk4_step(&rhs, &v, dt));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Divergence { t: cfg.t_final });
    }
    let v_c_final = CovarianceMatrix::new(v)?;
    let drift = cl.a_prime;

    let run = |index: usize| -> Result<Accumulated> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let mut x = DVector::zeros(n);
        if let Some(s) = &x0_sqrt {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            x = s * z;
        }
        let sqrt_dt = dt.sqrt();
        let mut dw = DVector::zeros(m);
        let mut dx = DVector::zeros(n);
        let mut outer = DMatrix::zeros(n, n);
        let mut state = DVector::zeros(n);
        for (k, load) in loadings.iter().enumerate() {
            for w in dw.iter_mut() {
                *w = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
            }
            dx.gemv(dt, &drift, &x, 0.0);
            dx.gemv(1.0, load, &dw, 1.0);
            x += &dx;
            if x.amax() > DIVERGENCE_BOUND || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::TrajectoryDivergence {
                    index,
                    t: (k + 1) as f64 * dt,
                });
            }
            if k >= n_burn {
                outer.ger(1.0, &x, &x, 1.0);
                state += &x;
            }
        }
        let scale = 1.0 / n_averaged as f64;
        Ok(Accumulated {
            outer: outer * scale,
            state: state * scale,
        })
    };

    let runs: Vec<Result<Accumulated>> = (0..cfg.n_traj).into_par_iter().map(run).collect();
    let mut outer_by_traj = Vec::with_capacity(cfg.n_traj);
    let mut state_by_traj = Vec::with_capacity(cfg.n_traj);
    for r in runs {
        let acc = r?;
        outer_by_traj.push(acc.outer);
        state_by_traj.push(acc.state);
    }
    let inv = 1.0 / cfg.n_traj as f64;
    let mean_outer = outer_by_traj
        .iter()
        .fold(DMatrix::zeros(n, n), |s, m| s + m)
        * inv;
    let mean_state = state_by_traj
        .iter()
        .fold(DVector::zeros(n), |s, x| s + x)
        * inv;
    let v_unconditional = v_c_final.matrix() + &mean_outer;
    Ok(TrajectoryStats {
        v_c_final,
        mean_outer,
        v_unconditional,
        mean_state,
        n_steps,
        n_averaged,
        outer_by_traj,
        state_by_traj,
    })
}

/// `tr[P V]` for the simulated unconditional covariance.
///
/// # Panics
/// If `p` and the state dimension differ.
pub fn regulation_cost(stats: &TrajectoryStats, p: &DMatrix<f64>) -> f64 {
    trace_product(p, &stats.v_unconditional)
}

/// Standard error of [`regulation_cost`] across trajectories.
pub fn regulation_cost_standard_error(stats: &TrajectoryStats, p: &DMatrix<f64>) -> f64 {
    standard_error(stats.outer_by_traj.iter().map(|m| trace_product(p, m)))
}
