//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nopo_lqg::dynamics::{is_hurwitz, lyapunov_steady, DEFAULT_HURWITZ_TOL};
use nopo_lqg::feedback::{closed_loop, heterodyne_gain, heterodyne_stable, homodyne_gain, homodyne_stable, optimal_gain};
use nopo_lqg::gaussian::{symplectic_eigenvalues, TwoModeBlocks};
use nopo_lqg::linalg::{max_abs_diff, trace_product};
use nopo_lqg::nopo::{
    self, build_plant, cost_matrix, heterodyne_closed_form_v, heterodyne_closed_loop_explicit,
    heterodyne_optimal_mu, homodyne_closed_form_v, homodyne_closed_loop_explicit,
    nonlocal_alpha_beta, optimal_nonlocal_w, optimize_scheme, NopoParams, SchemeId, SchemeResult,
};
use nopo_lqg::trajectories::{regulation_cost, regulation_cost_standard_error, simulate_conditional, SimConfig};
use nopo_lqg::unravelling::{lmi_feasible, measurement_model, recover_unravelling, riccati_steady, Unravelling};

/// Absolute floor added to every "within k standard errors" comparison.
const SE_FLOOR: f64 = 1e-10;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn chi_grid() -> Vec<f64> {
    (1..=9).map(|k| 0.05 * k as f64).collect()
}

fn params(chi: f64) -> NopoParams {
    NopoParams::new(chi).expect("grid coupling is admissible")
}

fn optimum(chi: f64, scheme: SchemeId) -> Result<SchemeResult, String> {
    optimize_scheme(params(chi), scheme).map_err(|e| format!("{scheme} at chi = {chi}: {e}"))
}

fn printed_optimal_u() -> Unravelling {
    let u = nalgebra::dmatrix![
        1.0, -1.0, 0.0, 0.0;
        -1.0, 1.0, 0.0, 0.0;
        0.0, 0.0, 1.0, 1.0;
        0.0, 0.0, 1.0, 1.0
    ] * 0.5;
    Unravelling::from_u_matrix(&u).expect("printed U is a valid unravelling")
}

fn ac1() -> Outcome {
    let mut worst_nonlocal: f64 = 0.0;
    let mut worst_none: f64 = 0.0;
    for chi in chi_grid() {
        let a = optimum(chi, SchemeId::NonlocalOptimal)?.log_negativity;
        let d = optimum(chi, SchemeId::None)?.log_negativity;
        worst_nonlocal = worst_nonlocal.max((a + (1.0 - 2.0 * chi).log2()).abs());
        worst_none = worst_none.max((d - (1.0 + 2.0 * chi).log2()).abs());
    }
    let spot_a = optimum(0.25, SchemeId::NonlocalOptimal)?.log_negativity;
    let spot_d = optimum(0.25, SchemeId::None)?.log_negativity;
    let detail = format!(
        "max |L_nonlocal - (-log2(1-2chi))| = {worst_nonlocal:.2e}, max |L_none - log2(1+2chi)| = {worst_none:.2e}, chi=0.25 -> ({spot_a:.6}, {spot_d:.6})"
    );
    if worst_nonlocal <= 1e-9
        && worst_none <= 1e-9
        && (spot_a - 1.0).abs() <= 1e-9
        && (spot_d - 0.584963).abs() <= 1e-6
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac2() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_iii: f64 = 0.0;
    let mut worst_iv: f64 = 0.0;
    let mut worst_pair: f64 = 0.0;
    for chi in chi_grid() {
        let none = optimum(chi, SchemeId::None)?.log_negativity;
        let iii = optimum(chi, SchemeId::LocalIII)?;
        let iv = optimum(chi, SchemeId::LocalIV)?;
        let lam_iii = iii.param("lambda").unwrap_or(f64::NAN);
        let lam_iv = iv.param("lambda").unwrap_or(f64::NAN);
        worst_iii = worst_iii.max((lam_iii - chi).abs());
        worst_iv = worst_iv.max((lam_iv + chi).abs());
        worst_pair = worst_pair.max((iii.log_negativity - iv.log_negativity).abs());
        for scheme in [SchemeId::LocalI, SchemeId::LocalII] {
            let r = optimum(chi, scheme)?;
            let lam = r.param("lambda").unwrap_or(f64::NAN);
            if lam.abs() > 1e-6 || (r.log_negativity - none).abs() > 1e-9 {
                failures.push(format!(
                    "{scheme} chi={chi:.2}: lambda*={lam:.6} L={:.6} vs open loop {none:.6}",
                    r.log_negativity
                ));
            }
        }
    }
    if worst_iii > 1e-6 {
        failures.push(format!("case iii max |lambda* - chi| = {worst_iii:.2e}"));
    }
    if worst_iv > 1e-6 {
        failures.push(format!("case iv max |lambda* + chi| = {worst_iv:.2e}"));
    }
    if worst_pair > 1e-9 {
        failures.push(format!("max |L_iii - L_iv| = {worst_pair:.2e}"));
    }
    let summary = format!(
        "iii max|lambda*-chi| = {worst_iii:.2e}, iv max|lambda*+chi| = {worst_iv:.2e}, max|L_iii-L_iv| = {worst_pair:.2e}"
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {} violations: {}", failures.len(), failures.join("; ")))
    }
}

fn ac3() -> Outcome {
    let mut worst_mu: f64 = 0.0;
    let mut failures = Vec::new();
    for chi in chi_grid() {
        let v = optimum(chi, SchemeId::HeterodyneV)?;
        let mu = v.param("mu").unwrap_or(f64::NAN);
        worst_mu = worst_mu.max((mu - heterodyne_optimal_mu(chi)).abs());
        let a = optimum(chi, SchemeId::NonlocalOptimal)?.log_negativity;
        let b = optimum(chi, SchemeId::LocalIII)?.log_negativity;
        let b2 = optimum(chi, SchemeId::LocalIV)?.log_negativity;
        let d = optimum(chi, SchemeId::None)?.log_negativity;
        let c = v.log_negativity;
        let strict = d < c && c < b;
        let ordered = a >= b - 1e-9 && (b - b2).abs() <= 1e-9 && b >= c && c >= d;
        if !(strict && ordered) {
            failures.push(format!("chi={chi:.2}: a={a:.6} b={b:.6} b'={b2:.6} c={c:.6} d={d:.6}"));
        }
    }
    if worst_mu > 1e-6 {
        failures.push(format!("max |mu* - closed form| = {worst_mu:.2e}"));
    }
    let summary = format!("max |mu* - closed form| = {worst_mu:.2e}, ordering a >= b = b' >= c >= d checked on 9 rows");
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", failures.join("; ")))
    }
}

fn ac4() -> Outcome {
    let mut worst_pure: f64 = 0.0;
    for chi in chi_grid() {
        for scheme in [SchemeId::NonlocalOptimal, SchemeId::LocalIV] {
            worst_pure = worst_pure.max(optimum(chi, scheme)?.entropy);
        }
    }
    let s_none = optimum(0.25, SchemeId::None)?.entropy;
    let s_iii = optimum(0.25, SchemeId::LocalIII)?.entropy;
    let s_het = optimum(0.25, SchemeId::HeterodyneV)?.entropy;
    let iv = TwoModeBlocks::symmetric(0.5, 2.0 / 3.0, 0.25, -1.0 / 3.0).assemble();
    let spectrum = symplectic_eigenvalues(&iv).map_err(|e| e.to_string())?;
    let spectrum_dev = spectrum
        .values
        .iter()
        .map(|v| (v - 0.5).abs())
        .fold(0.0, f64::max);
    let detail = format!(
        "max S(nonlocal, iv) = {worst_pure:.2e}; chi=0.25: S_none = {s_none:.6}, S_iii = {s_iii:.6}, S_het = {s_het:.6}; case-iv spectrum deviation {spectrum_dev:.1e}"
    );
    if worst_pure <= 1e-8
        && s_none > 0.0
        && s_iii > 0.0
        && s_het > 0.0
        && (s_none - 0.8028270921714564).abs() <= 1e-9
        && spectrum_dev <= 1e-9
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac5() -> Outcome {
    let u = printed_optimal_u();
    let mut worst_w: f64 = 0.0;
    let mut worst_phys: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for chi in [0.1, 0.25, 0.4] {
        let p = params(chi);
        let plant = build_plant(p);
        let w = riccati_steady(&plant, &u).map_err(|e| format!("chi={chi}: {e}"))?;
        let (alpha, beta) = nonlocal_alpha_beta(chi);
        let expected = nopo::alpha_beta_covariance(alpha, beta);
        worst_w = worst_w.max(max_abs_diff(w.matrix(), expected.matrix()));
        let lmi = lmi_feasible(&w, &plant, 1e-8).map_err(|e| e.to_string())?;
        worst_phys = worst_phys.max(lmi.physical_margin.abs());
        min_margin = min_margin.min(lmi.physical_margin).min(lmi.dynamical_margin);
    }
    let detail = format!(
        "max |W - W(alpha,beta)| = {worst_w:.2e}, min LMI margin = {min_margin:.2e}, max |physical margin| = {worst_phys:.2e}"
    );
    if worst_w <= 1e-8 && min_margin >= -1e-8 && worst_phys <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac6() -> Outcome {
    let printed = printed_optimal_u();
    let chi = 0.25;
    let plant = build_plant(params(chi));
    let w = optimal_nonlocal_w(chi);
    let rec = recover_unravelling(&w, &plant).map_err(|e| e.to_string())?;
    let u = rec.unravelling.u();
    let u_dev = max_abs_diff(u, printed.u());
    let idempotency = max_abs_diff(&(u * u), u);
    let roundtrip = riccati_steady(&plant, &rec.unravelling).map_err(|e| e.to_string())?;
    let rt_dev = max_abs_diff(roundtrip.matrix(), w.matrix());
    let detail = format!(
        "|U - printed U| = {u_dev:.2e}, residual = {:.2e}, |U^2 - U| = {idempotency:.2e}, roundtrip |W' - W| = {rt_dev:.2e}",
        rec.residual
    );
    if u_dev <= 1e-8 && rec.residual <= 1e-8 && idempotency <= 1e-10 && rt_dev <= 1e-7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let homodyne = Unravelling::homodyne(2);
    let heterodyne = Unravelling::heterodyne(2);
    let mut worst_matrix: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for _ in 0..50 {
        let chi = rng.random_range(0.0..0.45);
        let p = params(chi);
        let plant = build_plant(p);
        let dd = plant.drift_diffusion();

        let lp = rng.random_range(-0.5..0.25 - 0.5 * chi);
        let lm = rng.random_range(-0.5..0.25 + 0.5 * chi);
        let meas = measurement_model(&plant, &homodyne).map_err(|e| e.to_string())?;
        let general = closed_loop(&dd.a, &dd.d, &homodyne_gain(lp, lm), &meas).map_err(|e| e.to_string())?;
        let printed = homodyne_closed_loop_explicit(chi, lp, lm);
        worst_matrix = worst_matrix
            .max(max_abs_diff(&general.a_prime, &printed.a_prime))
            .max(max_abs_diff(&general.d_prime, &printed.d_prime));
        let v = lyapunov_steady(&general.a_prime, &general.d_prime).map_err(|e| e.to_string())?;
        let cf = homodyne_closed_form_v(p, lp, lm).map_err(|e| e.to_string())?;
        worst_v = worst_v.max(max_abs_diff(v.matrix(), cf.matrix()));

        let mu = rng.random_range(-0.5 - chi..0.5 - chi);
        let meas = measurement_model(&plant, &heterodyne).map_err(|e| e.to_string())?;
        let general = closed_loop(&dd.a, &dd.d, &heterodyne_gain(mu), &meas).map_err(|e| e.to_string())?;
        let printed = heterodyne_closed_loop_explicit(chi, mu);
        worst_matrix = worst_matrix
            .max(max_abs_diff(&general.a_prime, &printed.a_prime))
            .max(max_abs_diff(&general.d_prime, &printed.d_prime));
        let v = lyapunov_steady(&general.a_prime, &general.d_prime).map_err(|e| e.to_string())?;
        let cf = heterodyne_closed_form_v(p, mu).map_err(|e| e.to_string())?;
        worst_v = worst_v.max(max_abs_diff(v.matrix(), cf.matrix()));
    }
    let detail = format!("max |A',D' general - printed| = {worst_matrix:.2e}, max |V closed form - Lyapunov| = {worst_v:.2e} over 50 draws");
    if worst_matrix <= 1e-12 && worst_v <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac8() -> Outcome {
    let u = printed_optimal_u();
    let mut worst: f64 = 0.0;
    for chi in [0.05, 0.15, 0.25, 0.35, 0.45] {
        let plant = build_plant(params(chi));
        let dd = plant.drift_diffusion();
        let meas = measurement_model(&plant, &u).map_err(|e| e.to_string())?;
        let w = optimal_nonlocal_w(chi);
        let cl = closed_loop(&dd.a, &dd.d, &optimal_gain(&w, &meas), &meas).map_err(|e| e.to_string())?;
        let v = lyapunov_steady(&cl.a_prime, &cl.d_prime).map_err(|e| format!("chi={chi}: {e}"))?;
        worst = worst.max(max_abs_diff(v.matrix(), w.matrix()));
    }
    let detail = format!("max |Lyapunov(A',D') - W| = {worst:.2e} over 5 couplings");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac9() -> Outcome {
    let chi = 0.3;
    let plant = build_plant(params(chi));
    let u = printed_optimal_u();
    let w_closed = optimal_nonlocal_w(chi);
    let meas = measurement_model(&plant, &u).map_err(|e| e.to_string())?;
    let gain = optimal_gain(&w_closed, &meas);
    let cfg = SimConfig {
        dt: 1e-3,
        t_final: 20.0,
        n_traj: 1000,
        seed: 7,
        ..Default::default()
    };
    let stats = simulate_conditional(&plant, &u, &gain, &cfg).map_err(|e| e.to_string())?;
    let w = riccati_steady(&plant, &u).map_err(|e| e.to_string())?;
    let vc_dev = max_abs_diff(stats.v_c_final.matrix(), w.matrix());

    let se = stats.mean_outer_standard_error();
    let worst_outer = stats
        .mean_outer
        .iter()
        .zip(se.iter())
        .map(|(m, s)| m.abs() / (4.0 * s + SE_FLOOR))
        .fold(0.0, f64::max);

    let p = cost_matrix();
    let cost = regulation_cost(&stats, &p);
    let cost_se = regulation_cost_standard_error(&stats, &p);
    let m_opt = trace_product(&p, w.matrix());
    let cost_ratio = (cost - m_opt).abs() / (3.0 * cost_se + SE_FLOOR);

    let detail = format!(
        "|V_c - W| = {vc_dev:.2e}, max |mean_outer|/(4 SE + floor) = {worst_outer:.2e}, cost = {cost:.12} vs m_opt = {m_opt:.12} (ratio to 3 SE + floor {cost_ratio:.2e})"
    );
    if vc_dev <= 1e-6 && worst_outer <= 1.0 && cost_ratio <= 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac10() -> Outcome {
    let homodyne = Unravelling::homodyne(2);
    let heterodyne = Unravelling::heterodyne(2);
    let axis = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / 49.0;
    let mut disagreements = Vec::new();
    let mut nodes = 0;
    for chi in [0.1, 0.25, 0.4] {
        let plant = build_plant(params(chi));
        let dd = plant.drift_diffusion();
        let meas = measurement_model(&plant, &homodyne).map_err(|e| e.to_string())?;
        for i in 0..50 {
            for j in 0..50 {
                let (lp, lm) = (axis(-1.0, 1.0, i), axis(-1.0, 1.0, j));
                let cl = closed_loop(&dd.a, &dd.d, &homodyne_gain(lp, lm), &meas).map_err(|e| e.to_string())?;
                nodes += 1;
                if homodyne_stable(chi, lp, lm) != is_hurwitz(&cl.a_prime, DEFAULT_HURWITZ_TOL) {
                    disagreements.push(format!("homodyne chi={chi} l+={lp:.4} l-={lm:.4}"));
                }
            }
        }
    }
    for i in 0..50 {
        let chi = axis(0.0, 0.49, i);
        let plant = build_plant(params(chi));
        let dd = plant.drift_diffusion();
        let meas = measurement_model(&plant, &heterodyne).map_err(|e| e.to_string())?;
        for j in 0..50 {
            let mu = axis(-1.2, 0.8, j);
            let cl = closed_loop(&dd.a, &dd.d, &heterodyne_gain(mu), &meas).map_err(|e| e.to_string())?;
            nodes += 1;
            if heterodyne_stable(chi, mu) != is_hurwitz(&cl.a_prime, DEFAULT_HURWITZ_TOL) {
                disagreements.push(format!("heterodyne chi={chi:.4} mu={mu:.4}"));
            }
        }
    }
    let detail = format!("{} disagreements over {nodes} grid nodes", disagreements.len());
    if disagreements.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}: {}", disagreements.join("; ")))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1", "closed-form curves", ac1),
        ("AC2", "local-scheme optima", ac2),
        ("AC3", "heterodyne optimum and ordering", ac3),
        ("AC4", "purity", ac4),
        ("AC5", "Riccati and LMI consistency", ac5),
        ("AC6", "unravelling recovery", ac6),
        ("AC7", "general vs explicit closed loop", ac7),
        ("AC8", "optimal-gain fixed point", ac8),
        ("AC9", "Monte-Carlo oracle", ac9),
        ("AC10", "stability windows", ac10),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id:<5} PASS  {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id:<5} FAIL  {name} ({secs:.2}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
