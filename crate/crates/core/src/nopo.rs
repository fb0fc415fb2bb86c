//! Two damped modes coupled by a two-mode-squeezing Hamiltonian
//! `H = χ(q1 p2 + q2 p1)`, each mode damped at unit rate into its own bath.
//!
//! All rates are in units of the cavity linewidth. The input matrix is the
//! 4x4 identity, so every gain `BF` is simply `F`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{lyapunov_steady, PlantModel};
use crate::error::{Error, Result};
use crate::feedback::{
    closed_loop, heterodyne_gain, heterodyne_stable, homodyne_gain, homodyne_stable, optimal_gain,
    ClosedLoop, FeedbackGain,
};
use crate::gaussian::{log_negativity, von_neumann_entropy, CovarianceMatrix, TwoModeBlocks};
use crate::linalg::{spectral_abscissa, trace_product};
use crate::optimize::scan_then_golden;
use crate::unravelling::{
    lmi_feasible, measurement_model, recover_unravelling, LmiReport, Unravelling,
    UnravellingRecovery,
};

/// Largest admissible coupling; the oscillator threshold is at 1/2.
pub const CHI_MAX: f64 = 0.5 - 1e-6;
/// Distance kept from the open ends of every stability window.
pub const WINDOW_MARGIN: f64 = 1e-6;
/// Span used on a side of a homodyne window the stability condition leaves open.
pub const SEARCH_SPAN: f64 = 1.0;
pub const SCAN_POINTS: usize = 200;
pub const GOLDEN_TOL: f64 = 1e-9;
/// Feedback must beat no feedback by more than this to be selected.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NopoParams {
    chi: f64,
}

impl NopoParams {
    pub fn new(chi: f64) -> Result<Self> {
        if (0.0..=CHI_MAX).contains(&chi) {
            Ok(Self { chi })
        } else {
            Err(Error::ChiOutOfRange(chi))
        }
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    None,
    NonlocalOptimal,
    LocalI,
    LocalII,
    LocalIII,
    LocalIV,
    HeterodyneV,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::None,
        SchemeId::NonlocalOptimal,
        SchemeId::LocalI,
        SchemeId::LocalII,
        SchemeId::LocalIII,
        SchemeId::LocalIV,
        SchemeId::HeterodyneV,
    ];

    /// The curves of the entanglement figure, best first.
    pub const FIGURE: [SchemeId; 5] = [
        SchemeId::NonlocalOptimal,
        SchemeId::LocalIII,
        SchemeId::LocalIV,
        SchemeId::HeterodyneV,
        SchemeId::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::None => "none",
            SchemeId::NonlocalOptimal => "nonlocal",
            SchemeId::LocalI => "local-i",
            SchemeId::LocalII => "local-ii",
            SchemeId::LocalIII => "local-iii",
            SchemeId::LocalIV => "local-iv",
            SchemeId::HeterodyneV => "heterodyne",
        }
    }

    /// Direction `(s₊, s₋)` with `λ± = s± λ` for the homodyne cases.
    pub fn homodyne_direction(self) -> Option<(f64, f64)> {
        match self {
            SchemeId::LocalI => Some((1.0, 1.0)),
            SchemeId::LocalII => Some((1.0, 0.0)),
            SchemeId::LocalIII => Some((0.0, 1.0)),
            SchemeId::LocalIV => Some((1.0, -1.0)),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let id = match key.as_str() {
            "none" | "open-loop" => SchemeId::None,
            "nonlocal" | "nonlocal-optimal" | "optimal" => SchemeId::NonlocalOptimal,
            "local-i" | "i" => SchemeId::LocalI,
            "local-ii" | "ii" => SchemeId::LocalII,
            "local-iii" | "iii" => SchemeId::LocalIII,
            "local-iv" | "iv" => SchemeId::LocalIV,
            "heterodyne" | "heterodyne-v" | "v" => SchemeId::HeterodyneV,
            _ => return Err(Error::InvalidArgument(format!("unknown scheme '{s}'"))),
        };
        Ok(id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeParam {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct SchemeResult {
    pub scheme: SchemeId,
    pub chi: f64,
    /// First entry is the optimised parameter, when there is one.
    pub params: Vec<SchemeParam>,
    /// Unconditional steady-state covariance.
    pub v: CovarianceMatrix,
    /// Log-negativity, bits.
    pub log_negativity: f64,
    /// Von Neumann entropy, bits.
    pub entropy: f64,
    /// EPR cost `tr[PV]`.
    pub cost: f64,
    /// Minus the spectral abscissa of the closed-loop drift.
    pub stability_margin: f64,
    /// The optimiser ended on the edge of the stability window.
    pub boundary: bool,
    pub recovery: Option<UnravellingRecovery>,
    pub measurement_c: Option<DMatrix<f64>>,
}

impl SchemeResult {
    pub fn primary_param(&self) -> Option<&SchemeParam> {
        self.params.first()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

pub fn build_plant(p: NopoParams) -> PlantModel {
    let chi = p.chi();
    let mut g = DMatrix::zeros(4, 4);
    for (i, j) in [(0, 3), (1, 2), (2, 1), (3, 0)] {
        g[(i, j)] = chi;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut c = DMatrix::zeros(2, 4);
    c[(0, 0)] = Complex64::new(s, 0.0);
    c[(0, 1)] = Complex64::new(0.0, s);
    c[(1, 2)] = Complex64::new(s, 0.0);
    c[(1, 3)] = Complex64::new(0.0, s);
    PlantModel::new(g, c, DMatrix::identity(4, 4)).expect("oscillator plant is well formed")
}

pub fn open_loop_v(p: NopoParams) -> CovarianceMatrix {
    let chi = p.chi();
    let k = 1.0 / (1.0 - 4.0 * chi * chi);
    TwoModeBlocks::symmetric(0.5 * k, 0.5 * k, chi * k, -chi * k).assemble()
}

/// Quadratic form of `⟨(q1-q2)²⟩/2 + ⟨(p1+p2)²⟩/2`.
pub fn cost_matrix() -> DMatrix<f64> {
    nalgebra::dmatrix![
        1.0, 0.0, -1.0, 0.0;
        0.0, 1.0, 0.0, 1.0;
        -1.0, 0.0, 1.0, 0.0;
        0.0, 1.0, 0.0, 1.0
    ] * 0.5
}

/// `(α, β)` of the optimal conditional covariance:
/// `β = χ(1-χ)/(1-2χ)`, `α = ½√(1+4β²)`.
pub fn nonlocal_alpha_beta(chi: f64) -> (f64, f64) {
    let beta = chi * (1.0 - chi) / (1.0 - 2.0 * chi);
    (0.5 * (1.0 + 4.0 * beta * beta).sqrt(), beta)
}

pub fn alpha_beta_covariance(alpha: f64, beta: f64) -> CovarianceMatrix {
    TwoModeBlocks::symmetric(alpha, alpha, beta, -beta).assemble()
}

pub fn optimal_nonlocal_w(chi: f64) -> CovarianceMatrix {
    let (alpha, beta) = nonlocal_alpha_beta(chi);
    alpha_beta_covariance(alpha, beta)
}

/// Optimal measurement and Markovian feedback. The unconditional state equals
/// the conditional steady state `W`, and the unravelling that generates it is
/// recovered from `W`.
pub fn optimal_nonlocal(p: NopoParams) -> Result<SchemeResult> {
    let (alpha, beta) = nonlocal_alpha_beta(p.chi());
    let w = alpha_beta_covariance(alpha, beta);
    let plant = build_plant(p);
    let recovery = recover_unravelling(&w, &plant)?;
    let meas = measurement_model(&plant, &recovery.unravelling)?;
    let dd = plant.drift_diffusion();
    let cl = closed_loop(&dd.a, &dd.d, &optimal_gain(&w, &meas), &meas)?;
    Ok(SchemeResult {
        scheme: SchemeId::NonlocalOptimal,
        chi: p.chi(),
        params: vec![
            SchemeParam {
                name: "beta",
                value: beta,
            },
            SchemeParam {
                name: "alpha",
                value: alpha,
            },
        ],
        log_negativity: log_negativity(&w)?,
        entropy: von_neumann_entropy(&w)?,
        cost: 2.0 * (alpha - beta),
        stability_margin: -spectral_abscissa(&cl.a_prime)?,
        boundary: false,
        recovery: Some(recovery),
        measurement_c: Some(meas.c),
        v: w,
    })
}

#[derive(Clone, Debug)]
pub struct OptimumReport {
    /// Refined numeric optimum.
    pub alpha: f64,
    pub beta: f64,
    pub alpha_closed: f64,
    pub beta_closed: f64,
    /// Best feasible point of the coarse 2-D grid.
    pub grid_alpha: f64,
    pub grid_beta: f64,
    pub max_deviation: f64,
    /// `m` decreases strictly with `β` along `α = ½√(1+4β²)` up to the optimum.
    pub monotone: bool,
    pub lmi: LmiReport,
}

/// Constraints on the `(α, β)` family, each `>= 0` when satisfied.
fn family_constraints(chi: f64, alpha: f64, beta: f64) -> [f64; 3] {
    [
        alpha - 0.5 * (1.0 + 4.0 * beta * beta).sqrt(),
        0.5 - (alpha + beta) * (1.0 - 2.0 * chi),
        0.5 - (alpha - beta) * (1.0 + 2.0 * chi),
    ]
}

/// Numerically minimises `m = 2(α-β)` over the `(α, β)` family and checks
/// the result against the closed-form optimum.
pub fn verify_nonlocal_optimum(p: NopoParams, grid: usize) -> Result<OptimumReport> {
    if grid < 2 {
        return Err(Error::InvalidArgument("grid must have at least 2 points".into()));
    }
    let chi = p.chi();
    const FEAS_TOL: f64 = 1e-12;
    let feasible = |a: f64, b: f64| family_constraints(chi, a, b).iter().all(|c| *c >= -FEAS_TOL);

    // Any feasible point has |β| <= α <= 1/(2(1-2χ)).
    let span = 0.5 / (1.0 - 2.0 * chi);
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=grid {
        let alpha = 0.5 + (span - 0.5) * i as f64 / grid as f64;
        for j in 0..=2 * grid {
            let beta = -span + span * j as f64 / grid as f64;
            if feasible(alpha, beta)
                && best.is_none_or(|(a, b)| alpha - beta < a - b)
            {
                best = Some((alpha, beta));
            }
        }
    }
    let (grid_alpha, grid_beta) = best.ok_or_else(|| {
        Error::OptimalityViolation(format!("no feasible grid point at chi = {chi}"))
    })?;

    // Along the purity boundary m falls with β, so the optimum is the largest
    // β that keeps the boundary point feasible.
    let boundary_alpha = |b: f64| 0.5 * (1.0 + 4.0 * b * b).sqrt();
    let on_boundary_ok = |b: f64| feasible(boundary_alpha(b), b);
    let (mut lo, mut hi) = (grid_beta.max(0.0), span);
    if !on_boundary_ok(lo) {
        lo = 0.0;
    }
    if on_boundary_ok(hi) {
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if on_boundary_ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = lo;
    let alpha = boundary_alpha(beta);

    let (alpha_closed, beta_closed) = nonlocal_alpha_beta(chi);
    let max_deviation = (alpha - alpha_closed).abs().max((beta - beta_closed).abs());

    let cost_on_boundary = |b: f64| 2.0 * (boundary_alpha(b) - b);
    let samples: Vec<f64> = (0..=grid)
        .map(|k| cost_on_boundary(beta * k as f64 / grid as f64))
        .collect();
    let monotone = beta == 0.0 || samples.windows(2).all(|w| w[1] < w[0]);

    let lmi = lmi_feasible(&alpha_beta_covariance(alpha_closed, beta_closed), &build_plant(p), 1e-8)?;

    if max_deviation > 1e-6 {
        return Err(Error::OptimalityViolation(format!(
            "numeric optimum ({alpha}, {beta}) is {max_deviation:e} from the closed form"
        )));
    }
    if grid_alpha - grid_beta < alpha_closed - beta_closed - 1e-9 {
        return Err(Error::OptimalityViolation(format!(
            "grid point ({grid_alpha}, {grid_beta}) beats the closed form"
        )));
    }
    if !monotone {
        return Err(Error::OptimalityViolation(
            "cost is not monotone along the purity boundary".into(),
        ));
    }
    if !lmi.feasible {
        return Err(Error::OptimalityViolation(format!(
            "closed-form optimum violates the LMIs: {lmi:?}"
        )));
    }
    Ok(OptimumReport {
        alpha,
        beta,
        alpha_closed,
        beta_closed,
        grid_alpha,
        grid_beta,
        max_deviation,
        monotone,
        lmi,
    })
}

/// Averaged closed-loop drift and diffusion for homodyne (`Υ = I`) feedback,
/// written out entrywise.
pub fn homodyne_closed_loop_explicit(chi: f64, lambda_plus: f64, lambda_minus: f64) -> ClosedLoop {
    let (lp, lm) = (lambda_plus, lambda_minus);
    let diag = -0.5 + lm + lp;
    let cross = chi - lm + lp;
    let a_prime = nalgebra::dmatrix![
        diag, 0.0, cross, 0.0;
        0.0, -0.5, 0.0, -chi;
        cross, 0.0, diag, 0.0;
        0.0, -chi, 0.0, -0.5
    ];
    let s = 1.0 - lm - lp;
    let dd = s * s + (lm - lp) * (lm - lp);
    let dc = 2.0 * s * (lm - lp);
    let d_prime = nalgebra::dmatrix![
        dd, 0.0, dc, 0.0;
        0.0, 1.0, 0.0, 0.0;
        dc, 0.0, dd, 0.0;
        0.0, 0.0, 0.0, 1.0
    ] * 0.5;
    ClosedLoop { a_prime, d_prime }
}

/// Averaged closed-loop drift and diffusion for heterodyne (`Υ = 0`)
/// feedback, written out entrywise.
pub fn heterodyne_closed_loop_explicit(chi: f64, mu: f64) -> ClosedLoop {
    let k = chi + mu;
    let a_prime = nalgebra::dmatrix![
        -0.5, 0.0, k, 0.0;
        0.0, -0.5, 0.0, -k;
        k, 0.0, -0.5, 0.0;
        0.0, -k, 0.0, -0.5
    ];
    let e = 1.0 + 2.0 * mu * mu;
    let c = 2.0 * mu;
    let d_prime = nalgebra::dmatrix![
        e, 0.0, -c, 0.0;
        0.0, e, 0.0, c;
        -c, 0.0, e, 0.0;
        0.0, c, 0.0, e
    ] * 0.5;
    ClosedLoop { a_prime, d_prime }
}

/// Stationary covariance under homodyne feedback, as rational functions of
/// `χ` and `λ±`.
pub fn homodyne_closed_form_v(p: NopoParams, lambda_plus: f64, lambda_minus: f64) -> Result<CovarianceMatrix> {
    let chi = p.chi();
    let (lp, lm) = (lambda_plus, lambda_minus);
    if !homodyne_stable(chi, lp, lm) {
        return Err(Error::Unstable(format!(
            "homodyne feedback (λ+ = {lp}, λ- = {lm}) at chi = {chi}"
        )));
    }
    let den = (1.0 + 2.0 * chi - 4.0 * lm) * (-1.0 + 2.0 * chi + 4.0 * lp);
    let g_qq = (-1.0 + 4.0 * (1.0 + chi) * lp - 2.0 * (1.0 + 2.0 * chi) * lp * lp
        + lm * lm * (-2.0 + 4.0 * chi + 8.0 * lp)
        - 4.0 * lm * (-1.0 + chi + 4.0 * lp - 2.0 * lp * lp))
        / (2.0 * den);
    let s_qq = (lm * lm * (1.0 - 4.0 * lp) - lp * lp
        + 4.0 * lm * lp * lp
        + chi * (-1.0 + 2.0 * lm - 2.0 * lm * lm + 2.0 * lp - 2.0 * lp * lp))
        / den;
    let k = 1.0 / (1.0 - 4.0 * chi * chi);
    Ok(TwoModeBlocks::symmetric(g_qq, 0.5 * k, s_qq, -chi * k).assemble())
}

/// Stationary covariance under heterodyne feedback of strength `μ`.
pub fn heterodyne_closed_form_v(p: NopoParams, mu: f64) -> Result<CovarianceMatrix> {
    let chi = p.chi();
    if !heterodyne_stable(chi, mu) {
        return Err(Error::Unstable(format!(
            "heterodyne feedback μ = {mu} at chi = {chi}"
        )));
    }
    let den = -1.0 + 4.0 * (chi + mu) * (chi + mu);
    let g = (-1.0 + 4.0 * chi * mu + 2.0 * mu * mu) / (2.0 * den);
    let s = -(chi + 2.0 * chi * mu * mu + 2.0 * mu * mu * mu) / den;
    Ok(TwoModeBlocks::symmetric(g, g, s, -s).assemble())
}

/// Optimal heterodyne strength, `μ* = (-1 - 2χ + √(1+4χ²))/2`.
pub fn heterodyne_optimal_mu(chi: f64) -> f64 {
    0.5 * (-1.0 - 2.0 * chi + (1.0 + 4.0 * chi * chi).sqrt())
}

fn steady_result(
    p: NopoParams,
    scheme: SchemeId,
    unravelling: &Unravelling,
    gain: &FeedbackGain,
    params: Vec<SchemeParam>,
) -> Result<SchemeResult> {
    let plant = build_plant(p);
    let dd = plant.drift_diffusion();
    let meas = measurement_model(&plant, unravelling)?;
    let cl = closed_loop(&dd.a, &dd.d, gain, &meas)?;
    let v = lyapunov_steady(&cl.a_prime, &cl.d_prime)?;
    Ok(SchemeResult {
        scheme,
        chi: p.chi(),
        params,
        log_negativity: log_negativity(&v)?,
        entropy: von_neumann_entropy(&v)?,
        cost: trace_product(&cost_matrix(), v.matrix()),
        stability_margin: -spectral_abscissa(&cl.a_prime)?,
        boundary: false,
        recovery: None,
        measurement_c: None,
        v,
    })
}

/// Steady state of homodyne feedback with explicit `λ±`.
pub fn evaluate_homodyne(p: NopoParams, scheme: SchemeId, lambda_plus: f64, lambda_minus: f64, lambda: f64) -> Result<SchemeResult> {
    if !homodyne_stable(p.chi(), lambda_plus, lambda_minus) {
        return Err(Error::Unstable(format!(
            "homodyne feedback (λ+ = {lambda_plus}, λ- = {lambda_minus}) at chi = {}",
            p.chi()
        )));
    }
    steady_result(
        p,
        scheme,
        &Unravelling::homodyne(2),
        &homodyne_gain(lambda_plus, lambda_minus),
        vec![
            SchemeParam { name: "lambda", value: lambda },
            SchemeParam { name: "lambda_plus", value: lambda_plus },
            SchemeParam { name: "lambda_minus", value: lambda_minus },
        ],
    )
}

pub fn evaluate_heterodyne(p: NopoParams, mu: f64) -> Result<SchemeResult> {
    if !heterodyne_stable(p.chi(), mu) {
        return Err(Error::Unstable(format!(
            "heterodyne feedback μ = {mu} at chi = {}",
            p.chi()
        )));
    }
    steady_result(
        p,
        SchemeId::HeterodyneV,
        &Unravelling::heterodyne(2),
        &heterodyne_gain(mu),
        vec![SchemeParam { name: "mu", value: mu }],
    )
}

pub fn open_loop_result(p: NopoParams) -> Result<SchemeResult> {
    steady_result(
        p,
        SchemeId::None,
        &Unravelling::homodyne(2),
        &FeedbackGain::zero(4, 4),
        Vec::new(),
    )
}

/// Unravelling and gain that realise a scheme result.
pub fn scheme_controller(result: &SchemeResult) -> Result<(Unravelling, FeedbackGain)> {
    let missing = |name: &str| Error::InvalidArgument(format!("{} result has no parameter {name}", result.scheme));
    match result.scheme {
        SchemeId::None => Ok((Unravelling::homodyne(2), FeedbackGain::zero(4, 4))),
        SchemeId::NonlocalOptimal => {
            let plant = build_plant(NopoParams::new(result.chi)?);
            let u = match &result.recovery {
                Some(rec) => rec.unravelling.clone(),
                None => recover_unravelling(&result.v, &plant)?.unravelling,
            };
            let meas = measurement_model(&plant, &u)?;
            let gain = optimal_gain(&result.v, &meas);
            Ok((u, gain))
        }
        SchemeId::HeterodyneV => {
            let mu = result.param("mu").ok_or_else(|| missing("mu"))?;
            Ok((Unravelling::heterodyne(2), heterodyne_gain(mu)))
        }
        _ => {
            let lp = result.param("lambda_plus").ok_or_else(|| missing("lambda_plus"))?;
            let lm = result.param("lambda_minus").ok_or_else(|| missing("lambda_minus"))?;
            Ok((Unravelling::homodyne(2), homodyne_gain(lp, lm)))
        }
    }
}

/// Open interval of the scalar parameter that keeps a scheme stable, with
/// unbounded sides replaced by `±SEARCH_SPAN`.
pub fn parameter_window(scheme: SchemeId, chi: f64) -> Option<(f64, f64)> {
    if scheme == SchemeId::HeterodyneV {
        return Some((-0.5 - chi, 0.5 - chi));
    }
    let (sp, sm) = scheme.homodyne_direction()?;
    let (mut lo, mut hi) = (-SEARCH_SPAN, SEARCH_SPAN);
    for (s, bound) in [(sp, 0.25 - 0.5 * chi), (sm, 0.25 + 0.5 * chi)] {
        if s > 0.0 {
            hi = hi.min(bound / s);
        } else if s < 0.0 {
            lo = lo.max(bound / s);
        }
    }
    Some((lo, hi))
}

/// Maximises the log-negativity of a scheme over its scalar parameter.
///
/// The objective is evaluated through the general closed-loop Lyapunov route.
/// When no parameter beats zero feedback by more than `IMPROVEMENT_TOL`, zero
/// feedback is returned.
pub fn optimize_scheme(p: NopoParams, scheme: SchemeId) -> Result<SchemeResult> {
    let chi = p.chi();
    match scheme {
        SchemeId::None => open_loop_result(p),
        SchemeId::NonlocalOptimal => optimal_nonlocal(p),
        SchemeId::HeterodyneV => {
            let (lo, hi) = parameter_window(scheme, chi).expect("heterodyne has a window");
            let objective = |mu: f64| {
                evaluate_heterodyne(p, mu)
                    .map(|r| r.log_negativity)
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let (mu, boundary) = maximize_with_zero_fallback(objective, lo, hi);
            let mut result = evaluate_heterodyne(p, mu)?;
            result.boundary = boundary;
            Ok(result)
        }
        _ => {
            let (sp, sm) = scheme.homodyne_direction().expect("homodyne scheme");
            let (lo, hi) = parameter_window(scheme, chi).expect("homodyne has a window");
            let objective = |lambda: f64| {
                evaluate_homodyne(p, scheme, sp * lambda, sm * lambda, lambda)
                    .map(|r| r.log_negativity)
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let (lambda, boundary) = maximize_with_zero_fallback(objective, lo, hi);
            let mut result = evaluate_homodyne(p, scheme, sp * lambda, sm * lambda, lambda)?;
            result.boundary = boundary;
            Ok(result)
        }
    }
}

fn maximize_with_zero_fallback<F: Fn(f64) -> f64>(objective: F, lo: f64, hi: f64) -> (f64, bool) {
    let (lo, hi) = (lo + WINDOW_MARGIN, hi - WINDOW_MARGIN);
    let best = scan_then_golden(&objective, lo, hi, SCAN_POINTS, GOLDEN_TOL);
    if best.value <= objective(0.0) + IMPROVEMENT_TOL {
        (0.0, false)
    } else {
        (best.x, best.at_boundary)
    }
}

/// Evenly spaced coupling grid including both ends; a single step yields
/// `chi_min` alone.
pub fn chi_grid(chi_min: f64, chi_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    if !(0.0 <= chi_min && chi_min < chi_max && chi_max <= CHI_MAX) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= chi_min < chi_max <= {CHI_MAX}, got [{chi_min}, {chi_max}]"
        )));
    }
    if steps == 1 {
        return Ok(vec![chi_min]);
    }
    let h = (chi_max - chi_min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| if k + 1 == steps { chi_max } else { chi_min + h * k as f64 })
        .collect())
}

/// One result per `(χ, scheme)`, ordered by χ and then by the order of
/// `schemes`. Grid points are evaluated in parallel.
pub fn scheme_curves(
    chi_min: f64,
    chi_max: f64,
    steps: usize,
    schemes: &[SchemeId],
) -> Result<Vec<SchemeResult>> {
    let grid = chi_grid(chi_min, chi_max, steps)?;
    let rows: Vec<Result<Vec<SchemeResult>>> = grid
        .par_iter()
        .map(|&chi| {
            let p = NopoParams::new(chi)?;
            schemes.iter().map(|&s| optimize_scheme(p, s)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len() * schemes.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}
