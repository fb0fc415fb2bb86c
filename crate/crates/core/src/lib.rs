//! Linear-quadratic-Gaussian feedback control of continuously monitored
//! bosonic modes.
//!
//! The general layer works for any number of modes and output channels:
//! Gaussian-state diagnostics ([`gaussian`]), unconditional moment dynamics
//! ([`dynamics`]), measurement unravellings and the conditional Riccati
//! equation ([`unravelling`]), Markovian feedback ([`feedback`]) and a
//! Monte-Carlo check of the conditional dynamics ([`trajectories`]).
//! [`nopo`] specialises all of it to two modes coupled by a non-degenerate
//! parametric interaction.

pub mod dynamics;
pub mod error;
pub mod feedback;
pub mod gaussian;
pub mod linalg;
pub mod nopo;
pub mod optimize;
pub mod trajectories;
pub mod unravelling;

pub use dynamics::{lyapunov_steady, PlantModel};
pub use error::{Error, Result};
pub use feedback::{closed_loop, optimal_gain, ClosedLoop, FeedbackGain};
pub use gaussian::{log_negativity, von_neumann_entropy, CovarianceMatrix};
pub use nopo::{NopoParams, SchemeId, SchemeResult};
pub use trajectories::{simulate_conditional, SimConfig, TrajectoryStats};
pub use unravelling::{recover_unravelling, riccati_steady, MeasurementModel, Unravelling};
