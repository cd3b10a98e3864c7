use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use ising_tau::asymptotics::{
    a_of_lambda, extract_prefactor, sigma_of_lambda, tau_large_t, tau_small_t, wu_constant,
    AsymptoticConstants,
};
use ising_tau::fixtures::Fixtures;
use ising_tau::fredholm::fredholm_tau_minus;
use ising_tau::solver::{solve_family, BmtwParams, SolverConfig, Trajectory};
use ising_tau::specfn::FundamentalConstants;
use ising_tau::tau::{
    action_identity_residual, nu_action_residual, tau_action, tau_hamiltonian, tau_nu_on, Branch,
    NuRoute, PiiiIndex, Route, TauValue, DEFAULT_LAMBDA_NODES,
};
use ising_tau::verify::{fixture_checks, run_suite, Check, Suite, VerifyOptions};
use ising_tau::Error;

#[derive(Parser)]
#[command(
    name = "ising-tau",
    version,
    about = "Radial sinh-Gordon orbits and Ising tau functions"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Oracle fixtures to cross-check against; deltas are reported
    #[arg(long, global = true, value_name = "FILE")]
    fixtures: Option<PathBuf>,
    /// JSON file with solver configuration defaults
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    t_seed: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one orbit and write it as CSV
    Solve {
        #[arg(long)]
        lambda_pi: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate tau at one point by a chosen route
    Tau {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        lambda_pi: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long, value_enum, default_value_t = BranchArg::Minus)]
        branch: BranchArg,
        #[arg(long, value_enum, default_value_t = RouteArg::Hamiltonian)]
        route: RouteArg,
        /// Quadrature nodes (lambda nodes for action, Nystrom nodes for fredholm)
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Run a verification suite and emit the JSON report
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock time in the report
        #[arg(long)]
        timing: bool,
    },
    /// Evaluate a quantity over a parameter grid and write CSV
    Sweep {
        /// Comma-separated values
        #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
        lambda_grid: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        nu_grid: String,
        #[arg(long, default_value = "0.01,0.001,0.0001", allow_hyphen_values = true)]
        t_grid: String,
        #[arg(long, value_enum, default_value_t = Quantity::Tau)]
        quantity: Quantity,
        #[arg(long, value_enum, default_value_t = BranchArg::Minus)]
        branch: BranchArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the short-distance constant from tau samples
    Prefactor {
        #[arg(long)]
        lambda_pi: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long, value_enum, default_value_t = BranchArg::Minus)]
        branch: BranchArg,
        #[arg(long, default_value = "0.01,0.001,0.0001")]
        t_grid: String,
    },
    /// Dump the asymptotic constants of one member
    Constants {
        #[arg(long, default_value_t = 0.5)]
        lambda_pi: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Plus => Branch::Plus,
            BranchArg::Minus => Branch::Minus,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Hamiltonian,
    Action,
    NuProduct,
    Fredholm,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Specfn,
    Action,
    Tau,
    Nu,
    Fredholm,
    Constants,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Specfn => Suite::Specfn,
            SuiteArg::Action => Suite::Action,
            SuiteArg::Tau => Suite::Tau,
            SuiteArg::Nu => Suite::Nu,
            SuiteArg::Fredholm => Suite::Fredholm,
            SuiteArg::Constants => Suite::Constants,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantity {
    Tau,
    #[value(name = "A_est", alias = "a-est")]
    AEst,
    Residuals,
}

/// Failure of a command: usage errors exit 2, computation and check
/// failures exit 1.
enum Failure {
    Usage(String),
    Compute(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } | Error::Config(_) | Error::SeedTooSmall { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Checks) => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> CmdResult {
    let config = solver_config(&cli.common)?;
    let fixtures = match &cli.common.fixtures {
        Some(path) => Some(
            Fixtures::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let fixture_report = |config: &SolverConfig| -> CmdResult {
        let Some(fx) = &fixtures else { return Ok(()) };
        let checks = fixture_checks(fx, config);
        for c in &checks {
            eprintln!("{}", fixture_line(c));
        }
        if checks.iter().all(|c| c.pass) {
            Ok(())
        } else {
            Err(Failure::Checks)
        }
    };
    match cli.command {
        Command::Solve {
            lambda_pi,
            nu,
            t_min,
            t_max,
            out,
        } => {
            cmd_solve(lambda_pi, nu, t_min, t_max, out.as_deref(), config)?;
            fixture_report(&config)
        }
        Command::Tau {
            t,
            lambda_pi,
            nu,
            branch,
            route,
            nodes,
        } => {
            let value = cmd_tau(t, lambda_pi, nu, branch.into(), route, nodes, config)?;
            println!(
                "{}",
                serde_json::to_string(&value).expect("tau value serializes")
            );
            fixture_report(&config)
        }
        Command::Verify {
            suite,
            tol_scale,
            out,
            timing,
        } => {
            if !(tol_scale > 0.0 && tol_scale.is_finite()) {
                return Err(Failure::Usage(format!(
                    "--tol-scale must be positive, got {tol_scale}"
                )));
            }
            let opts = VerifyOptions {
                tol_scale,
                config,
                timing,
            };
            let mut report = run_suite(suite.into(), &opts);
            if let Some(fx) = &fixtures {
                report
                    .checks
                    .extend(fixture_checks(fx, &config).into_iter().map(|mut c| {
                        c.tolerance *= tol_scale;
                        c.pass = c.residual <= c.tolerance;
                        c
                    }));
                report.checks.sort_by(|a, b| a.name.cmp(&b.name));
            }
            let mut text = report.to_json();
            text.push('\n');
            write_output(out.as_deref(), text.as_bytes())?;
            for c in report.failures() {
                eprintln!("FAIL {}", fixture_line(c));
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Sweep {
            lambda_grid,
            nu_grid,
            t_grid,
            quantity,
            branch,
            out,
        } => {
            let grids = (
                parse_grid(&lambda_grid)?,
                parse_grid(&nu_grid)?,
                parse_grid(&t_grid)?,
            );
            let failed = cmd_sweep(grids, quantity, branch.into(), out.as_deref(), config)?;
            fixture_report(&config)?;
            if failed {
                Err(Failure::Checks)
            } else {
                Ok(())
            }
        }
        Command::Prefactor {
            lambda_pi,
            nu,
            branch,
            t_grid,
        } => {
            let ts = parse_grid(&t_grid)?;
            let report = cmd_prefactor(lambda_pi, nu, branch.into(), &ts, config)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("prefactor serializes")
            );
            fixture_report(&config)
        }
        Command::Constants { lambda_pi, nu } => {
            let report = cmd_constants(lambda_pi, nu)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("constants serialize")
            );
            fixture_report(&config)
        }
    }
}

fn fixture_line(c: &Check) -> String {
    match &c.error {
        Some(e) => format!("{} error: {e}", c.name),
        None => format!(
            "{} computed={:e} reference={:e} delta={:e} tol={:e} {}",
            c.name,
            c.lhs,
            c.rhs,
            c.residual,
            c.tolerance,
            if c.pass { "pass" } else { "FAIL" }
        ),
    }
}

fn solver_config(common: &Common) -> Result<SolverConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SolverConfig>(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => SolverConfig::default(),
    };
    if let Some(v) = common.t_seed {
        config.t_seed = v;
    }
    if let Some(v) = common.rel_tol {
        config.rel_tol = v;
    }
    if let Some(v) = common.abs_tol {
        config.abs_tol = v;
    }
    config.validate()?;
    Ok(config)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => File::create(p)?.write_all(bytes),
        None => io::stdout().lock().write_all(bytes),
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::Usage(format!("grid value {s:?} is not a finite number")))
        })
        .collect()
}

/// Configuration whose orbit covers `t`.
fn covering(config: &SolverConfig, t: f64) -> SolverConfig {
    let mut c = config.reaching(t);
    if t > c.t_seed {
        c.t_seed = t;
    }
    c
}

fn cmd_solve(
    lambda_pi: f64,
    nu: f64,
    t_min: Option<f64>,
    t_max: Option<f64>,
    out: Option<&Path>,
    mut config: SolverConfig,
) -> CmdResult {
    let params = BmtwParams::new(lambda_pi, nu)?;
    if let Some(t) = t_min {
        if !(t > 0.0) {
            return Err(Failure::Usage(format!("--t-min must be positive, got {t}")));
        }
        config = config.reaching(t);
        config.t_min = t;
    }
    let t_max = t_max.unwrap_or(config.t_seed);
    if !(t_max > config.t_min) {
        return Err(Failure::Usage(format!(
            "--t-max ({t_max}) must exceed t_min ({})",
            config.t_min
        )));
    }
    config = covering(&config, t_max);
    config.validate()?;
    let traj = solve_family(&params, &config)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(["t", "q", "p", "chi", "acc_H", "acc_action", "acc_aux"])?;
    let mut rows: Vec<_> = (0..traj.len())
        .map(|i| traj.node(i))
        .filter(|n| n.t <= t_max)
        .collect();
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    for n in rows {
        w.serialize((n.t, n.q, n.p, n.chi, n.acc_h, n.acc_action, n.acc_aux))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Compute(e.to_string()))?;
    write_output(out, &bytes)?;
    Ok(())
}

fn cmd_tau(
    t: f64,
    lambda_pi: f64,
    nu: f64,
    branch: Branch,
    route: RouteArg,
    nodes: Option<usize>,
    config: SolverConfig,
) -> Result<TauValue, Failure> {
    let params = BmtwParams::new(lambda_pi, nu)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Failure::Usage(format!("--t must be positive, got {t}")));
    }
    let config = covering(&config, t);
    Ok(match route {
        RouteArg::Hamiltonian => {
            let traj = solve_family(&params, &config)?;
            if nu == 0.0 {
                tau_hamiltonian(&traj, t, branch)?
            } else {
                tau_nu_on(&traj, t, branch, NuRoute::G1Direct)?
            }
        }
        RouteArg::NuProduct => {
            let traj = solve_family(&params, &config)?;
            tau_nu_on(&traj, t, branch, NuRoute::G10Product)?
        }
        RouteArg::Action => tau_action(
            t,
            &params,
            branch,
            nodes.unwrap_or(DEFAULT_LAMBDA_NODES),
            &config,
        )?,
        RouteArg::Fredholm => {
            if lambda_pi != 1.0 || nu != 0.0 || branch != Branch::Minus {
                return Err(Failure::Usage(
                    "the fredholm route is available only for --lambda-pi 1 --nu 0 --branch minus"
                        .into(),
                ));
            }
            fredholm_tau_minus(t, nodes.unwrap_or(200), None)?
        }
        RouteArg::Asymptotic => asymptotic_tau(t, &params, branch)?,
    })
}

/// Leading small-t law below t = 1, leading large-t law above.
fn asymptotic_tau(t: f64, params: &BmtwParams, branch: Branch) -> Result<TauValue, Failure> {
    let (route, value) = if t < 1.0 {
        (Route::AsymptoticSmallT, tau_small_t(t, params)?)
    } else {
        (Route::AsymptoticLargeT, tau_large_t(t, params, branch)?)
    };
    Ok(TauValue {
        t,
        params: *params,
        branch,
        route,
        value,
        est_error: f64::NAN,
    })
}

#[derive(Serialize)]
struct SweepRow {
    lambda_pi: f64,
    nu: f64,
    t: Option<f64>,
    quantity: &'static str,
    value: Option<f64>,
    est_error: Option<f64>,
    decay_ratio: Option<f64>,
    reference: Option<f64>,
    error: String,
}

impl SweepRow {
    fn new(lambda_pi: f64, nu: f64, t: Option<f64>, quantity: &'static str) -> Self {
        Self {
            lambda_pi,
            nu,
            t,
            quantity,
            value: None,
            est_error: None,
            decay_ratio: None,
            reference: None,
            error: String::new(),
        }
    }

    fn failed(mut self, e: impl std::fmt::Display) -> Self {
        self.error = e.to_string();
        self
    }
}

/// Returns whether any row failed.
fn cmd_sweep(
    (lambdas, nus, ts): (Vec<f64>, Vec<f64>, Vec<f64>),
    quantity: Quantity,
    branch: Branch,
    out: Option<&Path>,
    config: SolverConfig,
) -> Result<bool, Failure> {
    let members: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&lp| nus.iter().map(move |&nu| (lp, nu)))
        .collect();
    let rows: Vec<SweepRow> = if ts.is_empty() {
        Vec::new()
    } else {
        members
            .par_iter()
            .map(|&(lp, nu)| sweep_member(lp, nu, &ts, quantity, branch, &config))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record([
        "lambda_pi",
        "nu",
        "t",
        "quantity",
        "value",
        "est_error",
        "decay_ratio",
        "reference",
        "error",
    ])?;
    for row in &rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Compute(e.to_string()))?;
    write_output(out, &bytes)?;
    Ok(rows.iter().any(|r| !r.error.is_empty()))
}

fn sweep_member(
    lp: f64,
    nu: f64,
    ts: &[f64],
    quantity: Quantity,
    branch: Branch,
    config: &SolverConfig,
) -> Vec<SweepRow> {
    let t_lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let t_hi = ts.iter().copied().fold(0.0, f64::max);
    let prepare = || -> ising_tau::Result<(BmtwParams, SolverConfig)> {
        let params = BmtwParams::new(lp, nu)?;
        if !(t_lo > 0.0) {
            return Err(Error::Config(format!(
                "grid times must be positive, got {t_lo}"
            )));
        }
        Ok((params, covering(&covering(config, t_lo), t_hi)))
    };
    match quantity {
        Quantity::Tau => {
            let solved = prepare().and_then(|(p, c)| Ok((solve_family(&p, &c)?, nu)));
            ts.iter()
                .map(|&t| {
                    let row = SweepRow::new(lp, nu, Some(t), "tau");
                    match &solved {
                        Ok((traj, nu)) => match tau_on(traj, *nu, t, branch) {
                            Ok(v) => SweepRow {
                                value: Some(v.value),
                                est_error: Some(v.est_error),
                                ..row
                            },
                            Err(e) => row.failed(e),
                        },
                        Err(e) => row.failed(e),
                    }
                })
                .collect()
        }
        Quantity::AEst => {
            let row = SweepRow::new(lp, nu, None, "A_est");
            let r = prepare().and_then(|(p, c)| {
                let traj = solve_family(&p, &c)?;
                let samples = ts
                    .iter()
                    .map(|&t| Ok((t, tau_on(&traj, nu, t, branch)?.value)))
                    .collect::<ising_tau::Result<Vec<_>>>()?;
                let est = extract_prefactor(&samples, sigma_of_lambda(lp)?)?;
                let reference = if nu == 0.0 {
                    a_of_lambda(lp).ok()
                } else {
                    None
                };
                Ok((est, reference))
            });
            vec![match r {
                Ok((est, reference)) => SweepRow {
                    value: Some(est.a_est),
                    decay_ratio: Some(est.decay_ratio),
                    reference,
                    ..row
                },
                Err(e) => row.failed(e),
            }]
        }
        Quantity::Residuals => {
            let mut rows = Vec::new();
            for &t in ts {
                let checks: Vec<(&'static str, ising_tau::Result<f64>)> = match prepare() {
                    Err(e) => vec![("residual", Err(e))],
                    Ok((p, c)) if nu == 0.0 => {
                        vec![(
                            "action_identity",
                            action_identity_residual(t, &p, DEFAULT_LAMBDA_NODES, &c),
                        )]
                    }
                    Ok((p, c)) => vec![
                        (
                            "nu_action_j1",
                            nu_action_residual(t, &p, PiiiIndex::One, DEFAULT_LAMBDA_NODES, &c),
                        ),
                        (
                            "nu_action_j2",
                            nu_action_residual(t, &p, PiiiIndex::Two, DEFAULT_LAMBDA_NODES, &c),
                        ),
                    ],
                };
                for (name, r) in checks {
                    let row = SweepRow::new(lp, nu, Some(t), name);
                    rows.push(match r {
                        Ok(v) => SweepRow {
                            value: Some(v),
                            ..row
                        },
                        Err(e) => row.failed(e),
                    });
                }
            }
            rows
        }
    }
}

fn tau_on(traj: &Trajectory, nu: f64, t: f64, branch: Branch) -> ising_tau::Result<TauValue> {
    if nu == 0.0 {
        tau_hamiltonian(traj, t, branch)
    } else {
        tau_nu_on(traj, t, branch, NuRoute::G1Direct)
    }
}

#[derive(Serialize)]
struct PrefactorReport {
    lambda_pi: f64,
    nu: f64,
    branch: Branch,
    sigma: f64,
    a_est: f64,
    decay_ratio: f64,
    /// Closed form, known at nu = 0 only.
    a_of_lambda: Option<f64>,
    estimates: Vec<(f64, f64)>,
}

fn cmd_prefactor(
    lambda_pi: f64,
    nu: f64,
    branch: Branch,
    ts: &[f64],
    config: SolverConfig,
) -> Result<PrefactorReport, Failure> {
    let params = BmtwParams::new(lambda_pi, nu)?;
    let sigma = sigma_of_lambda(lambda_pi)?;
    let t_lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    if !(t_lo > 0.0) {
        return Err(Failure::Usage("--t-grid needs positive times".into()));
    }
    let traj = solve_family(&params, &covering(&config, t_lo))?;
    let samples = ts
        .iter()
        .map(|&t| Ok((t, tau_on(&traj, nu, t, branch)?.value)))
        .collect::<ising_tau::Result<Vec<_>>>()?;
    let est = match extract_prefactor(&samples, sigma) {
        Err(e @ Error::InsufficientSamples { .. }) => return Err(Failure::Usage(e.to_string())),
        r => r?,
    };
    Ok(PrefactorReport {
        lambda_pi,
        nu,
        branch,
        sigma,
        a_est: est.a_est,
        decay_ratio: est.decay_ratio,
        a_of_lambda: if nu == 0.0 {
            Some(a_of_lambda(lambda_pi)?)
        } else {
            None
        },
        estimates: est.estimates,
    })
}

fn cmd_constants(lambda_pi: f64, nu: f64) -> Result<Value, Failure> {
    let params = BmtwParams::new(lambda_pi, nu)?;
    let c = FundamentalConstants::get();
    let report = serde_json::json!({
        "fundamental": {
            "euler_gamma": c.euler_gamma,
            "zeta_prime_minus_one": c.zeta_prime_minus_one,
            "ln_two": c.ln_two,
            "ln_pi": c.ln_pi,
            "sqrt_pi": c.sqrt_pi,
        },
        "wu_constant": wu_constant(),
        "member": AsymptoticConstants::new(&params)?,
    });
    Ok(round_numbers(report))
}

/// Rounds every number in a JSON tree to 15 significant digits.
fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) => {
                let r: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
                serde_json::Number::from_f64(r)
                    .map(Value::Number)
                    .unwrap_or(Value::Null)
            }
            None => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect())
        }
        other => other,
    }
}
