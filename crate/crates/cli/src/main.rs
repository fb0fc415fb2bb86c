mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use nopo_lqg::dynamics::lyapunov_steady;
use nopo_lqg::feedback::closed_loop;
use nopo_lqg::gaussian::epr_variance;
use nopo_lqg::linalg::{max_abs_diff, trace_product};
use nopo_lqg::nopo::{
    build_plant, cost_matrix, open_loop_result, optimal_nonlocal_w, optimize_scheme, scheme_controller,
    scheme_curves, NopoParams, SchemeId,
};
use nopo_lqg::trajectories::{regulation_cost, regulation_cost_standard_error, simulate_conditional, SimConfig};
use nopo_lqg::unravelling::{measurement_model, recover_unravelling, riccati_steady};
use nopo_lqg::Error;

use output::{csv_table, emit, fmt12, matrix_rows, matrix_text, records_csv, records_text, round12, Record};

/// Absolute floor added to every "within k standard errors" comparison.
const SE_FLOOR: f64 = 1e-10;
const VC_TOL: f64 = 1e-6;
const LABEL_TOL: f64 = 1e-8;

/// Steady-state LQG feedback for two modes coupled by parametric
/// down-conversion. Rates are in units of the cavity linewidth; entropies and
/// log-negativities are in bits.
#[derive(Parser, Debug)]
#[command(name = "nopo-lqg", version)]
struct Cli {
    /// Output format; `curves` defaults to csv, every other command to text.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plant matrices and open-loop diagnostics.
    Model(ModelArgs),
    /// Optimised curves for a set of schemes over a coupling grid.
    Curves(CurvesArgs),
    /// Optimal parameter of one scheme.
    Optimize(OptimizeArgs),
    /// Monte-Carlo check of a scheme against its steady-state oracles.
    Verify(VerifyArgs),
    /// Unravelling that generates the optimal conditional state.
    Recover(ModelArgs),
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    #[arg(long)]
    chi: f64,
}

#[derive(Args, Debug, Serialize)]
struct CurvesArgs {
    #[arg(long, default_value_t = 0.0)]
    chi_min: f64,
    #[arg(long, default_value_t = 0.45)]
    chi_max: f64,
    #[arg(long, default_value_t = 46)]
    steps: usize,
    /// Comma-separated scheme names, or `all`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    schemes: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    chi: f64,
    #[arg(long, default_value = "nonlocal")]
    #[serde(serialize_with = "scheme_name")]
    scheme: SchemeId,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    chi: f64,
    #[arg(long, default_value = "nonlocal")]
    #[serde(serialize_with = "scheme_name")]
    scheme: SchemeId,
    #[arg(long, default_value_t = 1000)]
    ntraj: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn scheme_name<S: serde::Serializer>(s: &SchemeId, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(s.name())
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ChiOutOfRange(_) | Error::InvalidArgument(_) | Error::Unstable(_) => 2,
            Error::TrajectoryDivergence { .. } => 4,
            Error::RecoveryFailed { .. } | Error::LmiInfeasible { .. } => 5,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 3, message: format!("I/O error: {e}") }
    }
}

struct Report {
    content: String,
    passed: bool,
}

impl Report {
    fn ok(content: String) -> Self {
        Report { content, passed: true }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => match emit(cli.out.as_deref(), &report.content) {
            Ok(()) if report.passed => ExitCode::SUCCESS,
            Ok(()) => ExitCode::from(1),
            Err(e) => fail(Failure::from(e)),
        },
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("error: {}", f.message);
    ExitCode::from(f.code)
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Model(a) => cmd_model(a, cli.format.unwrap_or(Format::Text)),
        Command::Curves(a) => cmd_curves(a, cli.format.unwrap_or(Format::Csv)),
        Command::Optimize(a) => cmd_optimize(a, cli.format.unwrap_or(Format::Text)),
        Command::Verify(a) => cmd_verify(a, cli.format.unwrap_or(Format::Text)),
        Command::Recover(a) => cmd_recover(a, cli.format.unwrap_or(Format::Text)),
    }
}

fn document(command: &str, flags: &impl Serialize, body: Value) -> String {
    let mut doc = json!({
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "flags": flags,
        }
    });
    if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
    s.push('\n');
    s
}

fn cmd_model(a: &ModelArgs, format: Format) -> Result<Report, Failure> {
    let p = NopoParams::new(a.chi)?;
    let plant = build_plant(p);
    let dd = plant.drift_diffusion();
    let open = open_loop_result(p)?;
    let epr = epr_variance(&open.v, 0.0)?;
    let c_re = plant.c_tilde.map(|z| z.re);
    let c_im = plant.c_tilde.map(|z| z.im);
    let record = Record::from_result(&open);
    let content = match format {
        Format::Csv => records_csv(&[record])?,
        Format::Json => document(
            "model",
            a,
            json!({
                "model": {
                    "chi": round12(a.chi),
                    "G": matrix_rows(&plant.g),
                    "C_tilde_re": matrix_rows(&c_re),
                    "C_tilde_im": matrix_rows(&c_im),
                    "A": matrix_rows(&dd.a),
                    "D": matrix_rows(&dd.d),
                    "V_open": matrix_rows(open.v.matrix()),
                    "L_bits": round12(open.log_negativity),
                    "S_bits": round12(open.entropy),
                    "epr_variance": round12(epr),
                },
                "rows": [record],
            }),
        ),
        Format::Text => {
            let mut s = format!("chi = {}\n\n", a.chi);
            for (label, m) in [
                ("G (Hamiltonian matrix)", &plant.g),
                ("C~ real part", &c_re),
                ("C~ imaginary part", &c_im),
                ("A (drift)", &dd.a),
                ("D (diffusion)", &dd.d),
                ("V (open-loop steady state)", open.v.matrix()),
            ] {
                s.push_str(&matrix_text(label, m));
                s.push('\n');
            }
            s.push_str(&format!("log-negativity L = {} bits\n", fmt12(open.log_negativity)));
            s.push_str(&format!("entropy S = {} bits\n", fmt12(open.entropy)));
            s.push_str(&format!("EPR variance = {}\n", fmt12(epr)));
            s
        }
    };
    Ok(Report::ok(content))
}

fn parse_schemes(names: &[String]) -> Result<Vec<SchemeId>, Failure> {
    let mut out = Vec::new();
    for name in names {
        if name.trim().eq_ignore_ascii_case("all") {
            out.extend(SchemeId::FIGURE);
        } else {
            out.push(name.parse::<SchemeId>().map_err(|e| Failure::domain(e.to_string()))?);
        }
    }
    if out.is_empty() {
        return Err(Failure::domain("no schemes given"));
    }
    Ok(out)
}

fn cmd_curves(a: &CurvesArgs, format: Format) -> Result<Report, Failure> {
    let schemes = parse_schemes(&a.schemes)?;
    let rows = scheme_curves(a.chi_min, a.chi_max, a.steps, &schemes)?;
    let records: Vec<Record> = rows.iter().map(Record::from_result).collect();
    let content = match format {
        Format::Csv => records_csv(&records)?,
        Format::Json => document("curves", a, json!({ "rows": records })),
        Format::Text => records_text(&records),
    };
    Ok(Report::ok(content))
}

fn cmd_optimize(a: &OptimizeArgs, format: Format) -> Result<Report, Failure> {
    let r = optimize_scheme(NopoParams::new(a.chi)?, a.scheme)?;
    let record = Record::from_result(&r);
    let content = match format {
        Format::Csv => records_csv(&[record])?,
        Format::Json => {
            let params: serde_json::Map<String, Value> =
                r.params.iter().map(|p| (p.name.to_string(), json!(round12(p.value)))).collect();
            document(
                "optimize",
                a,
                json!({
                    "params": params,
                    "stability_margin": round12(r.stability_margin),
                    "boundary": r.boundary,
                    "rows": [record],
                }),
            )
        }
        Format::Text => {
            let mut s = format!("scheme {} at chi = {}\n", r.scheme, a.chi);
            for p in &r.params {
                s.push_str(&format!("  {} = {}\n", p.name, fmt12(p.value)));
            }
            s.push_str(&format!("  L = {} bits\n", fmt12(r.log_negativity)));
            s.push_str(&format!("  S = {} bits\n", fmt12(r.entropy)));
            s.push_str(&format!("  m = {}\n", fmt12(r.cost)));
            s.push_str(&format!("  stability margin = {}\n", fmt12(r.stability_margin)));
            if r.boundary {
                s.push_str("  optimum lies on the edge of the stability window\n");
            }
            s
        }
    };
    Ok(Report::ok(content))
}

#[derive(Serialize)]
struct Check {
    check: &'static str,
    statistic: f64,
    limit: f64,
    pass: bool,
}

fn cmd_verify(a: &VerifyArgs, format: Format) -> Result<Report, Failure> {
    let p = NopoParams::new(a.chi)?;
    let cfg = SimConfig {
        dt: a.dt,
        t_final: a.horizon,
        n_traj: a.ntraj,
        seed: a.seed,
        ..Default::default()
    };
    cfg.validate()?;
    let result = optimize_scheme(p, a.scheme)?;
    let (u, gain) = scheme_controller(&result)?;
    let plant = build_plant(p);
    let dd = plant.drift_diffusion();
    let meas = measurement_model(&plant, &u)?;
    let cl = closed_loop(&dd.a, &dd.d, &gain, &meas)?;
    let v_cl = lyapunov_steady(&cl.a_prime, &cl.d_prime)?;
    let w = riccati_steady(&plant, &u)?;
    let stats = simulate_conditional(&plant, &u, &gain, &cfg)?;

    let vc_dev = max_abs_diff(stats.v_c_final.matrix(), w.matrix());
    let outer_target = v_cl.matrix() - w.matrix();
    let outer_se = stats.mean_outer_standard_error();
    let outer_ratio = ratio_max(&stats.mean_outer, &outer_target, &outer_se, 4.0);
    let state_se = stats.mean_state_standard_error();
    let state_ratio = stats
        .mean_state
        .iter()
        .zip(state_se.iter())
        .map(|(m, s)| m.abs() / (4.0 * s + SE_FLOOR))
        .fold(0.0, f64::max);
    let pm = cost_matrix();
    let cost = regulation_cost(&stats, &pm);
    let cost_target = trace_product(&pm, v_cl.matrix());
    let cost_ratio = (cost - cost_target).abs() / (3.0 * regulation_cost_standard_error(&stats, &pm) + SE_FLOOR);

    let checks = [
        Check {
            check: "conditional covariance",
            statistic: vc_dev,
            limit: VC_TOL,
            pass: vc_dev <= VC_TOL,
        },
        Check {
            check: "mean state",
            statistic: state_ratio,
            limit: 1.0,
            pass: state_ratio <= 1.0,
        },
        Check {
            check: "mean outer product",
            statistic: outer_ratio,
            limit: 1.0,
            pass: outer_ratio <= 1.0,
        },
        Check {
            check: "regulation cost",
            statistic: cost_ratio,
            limit: 1.0,
            pass: cost_ratio <= 1.0,
        },
    ];
    let passed = checks.iter().all(|c| c.pass);
    let content = match format {
        Format::Csv => csv_table(
            &["check", "statistic", "limit", "pass"],
            checks
                .iter()
                .map(|c| [c.check.to_string(), fmt12(c.statistic), fmt12(c.limit), c.pass.to_string()]),
        )?,
        Format::Json => {
            let checks: Vec<Value> = checks
                .iter()
                .map(|c| json!({"check": c.check, "statistic": round12(c.statistic), "limit": c.limit, "pass": c.pass}))
                .collect();
            document(
                "verify",
                a,
                json!({
                    "checks": checks,
                    "cost": round12(cost),
                    "cost_oracle": round12(cost_target),
                    "pass": passed,
                }),
            )
        }
        Format::Text => {
            let mut s = format!(
                "verify {} at chi = {} ({} trajectories, dt = {}, T = {}, seed {})\n",
                a.scheme, a.chi, a.ntraj, a.dt, a.horizon, a.seed
            );
            let notes = [
                "max |V_c(T) - W|",
                "max |mean x| / (4 SE + floor)",
                "max |E[x x^T] - (V - W)| / (4 SE + floor)",
                "|cost - tr(P V)| / (3 SE + floor)",
            ];
            for (c, note) in checks.iter().zip(notes) {
                let flag = if c.pass { "PASS" } else { "FAIL" };
                s.push_str(&format!(
                    "{flag}  {:<24} {note} = {:.3e} (limit {:.0e})\n",
                    c.check, c.statistic, c.limit
                ));
            }
            s.push_str(&format!("cost = {} (oracle {})\n", fmt12(cost), fmt12(cost_target)));
            s.push_str(if passed { "result: PASS\n" } else { "result: FAIL\n" });
            s
        }
    };
    Ok(Report { content, passed })
}

fn ratio_max(x: &DMatrix<f64>, target: &DMatrix<f64>, se: &DMatrix<f64>, k: f64) -> f64 {
    x.iter()
        .zip(target.iter())
        .zip(se.iter())
        .map(|((x, t), s)| (x - t).abs() / (k * s + SE_FLOOR))
        .fold(0.0, f64::max)
}

/// Names the measured quadrature combination of a row of `U`, whose columns
/// are ordered `(q1, q2, p1, p2)`.
fn quadrature_label(row: &[f64]) -> String {
    const NAMES: [&str; 4] = ["q1", "q2", "p1", "p2"];
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= LABEL_TOL {
        return "0".into();
    }
    let support: Vec<usize> = (0..4).filter(|&i| row[i].abs() > LABEL_TOL).collect();
    match support.as_slice() {
        [i] => NAMES[*i].into(),
        [i, j] if (row[*i].abs() - row[*j].abs()).abs() <= LABEL_TOL => {
            let sign = if row[*i] * row[*j] > 0.0 { "+" } else { "−" };
            format!("{}{sign}{}", NAMES[*i], NAMES[*j])
        }
        _ => "mixed".into(),
    }
}

fn cmd_recover(a: &ModelArgs, format: Format) -> Result<Report, Failure> {
    let p = NopoParams::new(a.chi)?;
    let plant = build_plant(p);
    let w = optimal_nonlocal_w(a.chi);
    let rec = recover_unravelling(&w, &plant).map_err(|e| Failure {
        code: match e {
            Error::ChiOutOfRange(_) => 2,
            _ => 5,
        },
        message: e.to_string(),
    })?;
    let u = rec.unravelling.u();
    let labels: Vec<String> = u
        .row_iter()
        .map(|r| quadrature_label(&r.iter().copied().collect::<Vec<_>>()))
        .collect();
    let alpha = w.matrix()[(0, 0)];
    let beta = w.matrix()[(0, 2)];
    let content = match format {
        Format::Csv => csv_table(
            &["row", "label", "u_q1", "u_q2", "u_p1", "u_p2"],
            u.row_iter().enumerate().map(|(i, r)| {
                let mut f = vec![i.to_string(), labels[i].clone()];
                f.extend(r.iter().map(|x| fmt12(*x)));
                f
            }),
        )?,
        Format::Json => document(
            "recover",
            a,
            json!({
                "alpha": round12(alpha),
                "beta": round12(beta),
                "W": matrix_rows(w.matrix()),
                "U": matrix_rows(u),
                "residual": rec.residual,
                "labels": labels,
            }),
        ),
        Format::Text => {
            let mut s = format!("chi = {}\nalpha = {}\nbeta = {}\n\n", a.chi, fmt12(alpha), fmt12(beta));
            s.push_str(&matrix_text("W (conditional steady state)", w.matrix()));
            s.push('\n');
            s.push_str(&matrix_text("U (columns q1 q2 p1 p2)", u));
            s.push_str(&format!("\nresidual = {:.3e}\n", rec.residual));
            s.push_str(&format!("measured rows: {}\n", labels.join(", ")));
            s
        }
    };
    Ok(Report::ok(content))
}
