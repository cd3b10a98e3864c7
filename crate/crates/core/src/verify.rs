//! Verification batteries: named residuals with tolerances, grouped in suites.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::asymptotics::{
    a_limit_at_zero, a_of_lambda, b_coeff, b_coeff_ising, c_of_nu, extract_prefactor,
    l_decomposition_residual, lambda_pi_of_sigma, psi_small_t, psi_small_t_critical,
    sigma_of_lambda, tau_large_t, tau_large_t_minus_excess, wu_constant, wu_identity_residual,
};
use crate::error::Result;
use crate::fixtures::Fixtures;
use crate::fredholm::{det_one_minus_k_squared, fredholm_tau_minus};
use crate::solver::{hamiltonian, solve_family, BmtwParams, SolverConfig, Trajectory};
use crate::specfn::{
    barnes_integral_residual, bc_integral, bessel_k, digamma, ln_barnes_g, ln_gamma,
    FundamentalConstants, EULER_GAMMA, LN_PI, SQRT_PI, ZETA_PRIME_MINUS_ONE,
};
use crate::tau::{
    action_identity_residuals, action_s, nu_action_terms, tau_action_many, tau_hamiltonian,
    tau_minus_excess, tau_nu_on, Branch, NuRoute, PiiiIndex, DEFAULT_LAMBDA_NODES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Specfn,
    Action,
    Tau,
    Nu,
    Fredholm,
    Constants,
    All,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Specfn,
        Suite::Action,
        Suite::Tau,
        Suite::Nu,
        Suite::Fredholm,
        Suite::Constants,
        Suite::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Specfn => "specfn",
            Suite::Action => "action",
            Suite::Tau => "tau",
            Suite::Nu => "nu",
            Suite::Fredholm => "fredholm",
            Suite::Constants => "constants",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
            error: None,
        }
    }

    /// |lhs - rhs| <= tolerance.
    pub fn abs(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::new(name, lhs, rhs, (lhs - rhs).abs(), tolerance)
    }

    /// |lhs / rhs - 1| <= tolerance.
    pub fn rel(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::new(name, lhs, rhs, (lhs / rhs - 1.0).abs(), tolerance)
    }

    /// A residual computed elsewhere, compared against zero.
    pub fn residual(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self::new(name, residual, 0.0, residual.abs(), tolerance)
    }

    /// Largest increase between consecutive values; passes when the sequence
    /// never increases.
    pub fn non_increasing(name: impl Into<String>, values: &[f64]) -> Self {
        let worst = values
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max);
        let first = values.first().copied().unwrap_or(f64::NAN);
        let last = values.last().copied().unwrap_or(f64::NAN);
        Self::new(name, first, last, worst, 0.0)
    }

    fn failed(name: impl Into<String>, err: impl fmt::Display) -> Self {
        Self {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            residual: f64::NAN,
            tolerance: 0.0,
            pass: false,
            error: Some(err.to_string()),
        }
    }

    fn scaled(mut self, scale: f64) -> Self {
        self.tolerance *= scale;
        self.pass = self.residual <= self.tolerance;
        self
    }
}

/// An observation recorded in a report without a pass/fail verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flag {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub flags: Vec<Flag>,
    /// Wall-clock time; `None` unless timing was requested, so that reports
    /// stay byte-identical between runs.
    pub runtime_seconds: Option<f64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    pub config: SolverConfig,
    pub timing: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            config: SolverConfig::default(),
            timing: false,
        }
    }
}

/// Collects checks, turning computation errors into failed checks.
#[derive(Default)]
struct Sink {
    checks: Vec<Check>,
    flags: Vec<Flag>,
}

impl Sink {
    fn push(&mut self, name: &str, r: Result<Check>) {
        match r {
            Ok(c) => self.checks.push(c),
            Err(e) => self.checks.push(Check::failed(name, e)),
        }
    }

    fn push_all(&mut self, name: &str, r: Result<Vec<Check>>) {
        match r {
            Ok(cs) => self.checks.extend(cs),
            Err(e) => self.checks.push(Check::failed(name, e)),
        }
    }

    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<Check>) {
        self.push(name, f());
    }

    fn run_all(&mut self, name: &str, f: impl FnOnce() -> Result<Vec<Check>>) {
        self.push_all(name, f());
    }
}

/// Tighter integration used where a quantity approaches the default
/// tolerance floor (small-t limits).
pub fn tight_config(config: &SolverConfig) -> SolverConfig {
    SolverConfig {
        rel_tol: config.rel_tol.min(1e-13),
        abs_tol: config.abs_tol.min(1e-15),
        ..*config
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> VerificationReport {
    let start = std::time::Instant::now();
    let fx = Fixtures::embedded();
    let mut sink = Sink::default();
    let cfg = &opts.config;
    let run = |s: Suite| suite == s || suite == Suite::All;
    if run(Suite::Specfn) {
        specfn_checks(&mut sink, &fx);
    }
    if run(Suite::Constants) {
        constants_checks(&mut sink, &fx);
    }
    if run(Suite::Action) {
        action_checks(&mut sink, cfg);
    }
    if run(Suite::Tau) {
        tau_checks(&mut sink, &fx, cfg);
    }
    if run(Suite::Nu) {
        nu_checks(&mut sink, &fx, cfg);
    }
    if run(Suite::Fredholm) {
        fredholm_checks(&mut sink, &fx, cfg);
    }
    let mut checks: Vec<Check> = sink
        .checks
        .into_iter()
        .map(|c| c.scaled(opts.tol_scale))
        .collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let mut flags = sink.flags;
    flags.sort_by(|a, b| a.name.cmp(&b.name));
    VerificationReport {
        suite: suite.name().to_string(),
        checks,
        flags,
        runtime_seconds: opts.timing.then(|| start.elapsed().as_secs_f64()),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn specfn_checks(sink: &mut Sink, fx: &Fixtures) {
    sink.run("specfn.gamma_half", || {
        Ok(Check::abs(
            "specfn.gamma_half",
            ln_gamma(0.5)?.exp(),
            SQRT_PI,
            1e-13,
        ))
    });
    sink.run("specfn.ln_gamma_two", || {
        Ok(Check::abs(
            "specfn.ln_gamma_two",
            ln_gamma(2.0)?,
            0.0,
            1e-15,
        ))
    });
    sink.run("specfn.ln_gamma_third", || {
        Ok(Check::rel(
            "specfn.ln_gamma_third",
            ln_gamma(1.0 / 3.0)?,
            fx.value("ln_gamma_third")?,
            1e-13,
        ))
    });
    sink.run("specfn.digamma_three_halves", || {
        let expect = 2.0 - EULER_GAMMA - 2.0 * LN_2;
        Ok(Check::abs(
            "specfn.digamma_three_halves",
            digamma(1.5)?,
            expect,
            1e-14,
        ))
    });
    sink.run("specfn.barnes_g_half", || {
        let closed = 3.0 * ZETA_PRIME_MINUS_ONE - 0.5 * LN_PI + LN_2 / 12.0;
        Ok(Check::abs(
            "specfn.barnes_g_half",
            2.0 * ln_barnes_g(0.5)?,
            closed,
            1e-11,
        ))
    });
    sink.run("specfn.barnes_g_half_fixture", || {
        Ok(Check::abs(
            "specfn.barnes_g_half_fixture",
            ln_barnes_g(0.5)?,
            fx.value("ln_barnes_g_half")?,
            1e-12,
        ))
    });
    for z in [0.25, 0.5, 1.0] {
        let name = format!("specfn.barnes_integral.z={z}");
        sink.push(
            &name,
            barnes_integral_residual(z).map(|r| Check::residual(name.clone(), r, 1e-10)),
        );
    }
    for t in log_grid(0.1, 30.0, 20) {
        let name = format!("specfn.bc_integral_vs_k0.t={t:.6}");
        sink.run(&name, || {
            let (i, _) = bc_integral(t, 0.0, false)?;
            Ok(Check::rel(name.clone(), i, bessel_k(0, t)?, 1e-10))
        });
    }
    sink.run("specfn.bc_integral_nu", || {
        let (i, _) = bc_integral(1.0, 0.25, false)?;
        Ok(Check::rel(
            "specfn.bc_integral_nu",
            i,
            fx.value("bc_integral_t1_nu_0_25")?,
            1e-10,
        ))
    });
    for (name, order, t) in [("k0_t1", 0, 1.0), ("k0_t2", 0, 2.0), ("k1_t2", 1, 2.0)] {
        let cname = format!("specfn.{name}");
        sink.run(&cname, || {
            Ok(Check::rel(
                cname.clone(),
                bessel_k(order, t)?,
                fx.value(name)?,
                1e-12,
            ))
        });
    }
    sink.run("specfn.k0_large_t", || {
        let t = 30.0;
        let lead = (PI / (2.0 * t)).sqrt() * (-t).exp();
        Ok(Check::new(
            "specfn.k0_large_t",
            bessel_k(0, t)? / lead,
            1.0,
            (bessel_k(0, t)? / lead - 1.0).abs(),
            1e-2,
        ))
    });
    sink.run("specfn.k1_derivative", || {
        let h = 1e-5;
        let fd = -(bessel_k(0, 2.0 + h)? - bessel_k(0, 2.0 - h)?) / (2.0 * h);
        Ok(Check::abs(
            "specfn.k1_derivative",
            bessel_k(1, 2.0)?,
            fd,
            1e-8,
        ))
    });
}

fn constants_checks(sink: &mut Sink, fx: &Fixtures) {
    let c = FundamentalConstants::get();
    for (name, value) in [
        ("euler_gamma", c.euler_gamma),
        ("zeta_prime_minus_one", c.zeta_prime_minus_one),
        ("ln_two", c.ln_two),
        ("ln_pi", c.ln_pi),
        ("sqrt_pi", c.sqrt_pi),
    ] {
        let cname = format!("constants.fundamental.{name}");
        sink.run(&cname, || {
            Ok(Check::rel(
                cname.clone(),
                value,
                fx.value(&format!("const_{name}"))?,
                1e-15,
            ))
        });
        let decimal = FundamentalConstants::DECIMAL
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, d)| *d)
            .unwrap_or("");
        let dname = format!("constants.decimal.{name}");
        sink.run(&dname, || {
            let reference = &fx
                .get(&format!("const_{name}"))
                .map(|f| f.value.clone())
                .unwrap_or_default();
            let agree = common_digits(decimal, reference) as f64;
            Ok(Check::new(
                dname.clone(),
                agree,
                30.0,
                (30.0 - agree).max(0.0),
                0.0,
            ))
        });
    }
    sink.push(
        "constants.wu_identity",
        wu_identity_residual().map(|r| Check::residual("constants.wu_identity", r, 1e-12)),
    );
    sink.run("constants.wu_value", || {
        Ok(Check::rel(
            "constants.wu_value",
            wu_constant(),
            fx.value("wu_constant")?,
            1e-14,
        ))
    });
    for (lp, name) in [(0.25, "0_25"), (0.5, "0_5"), (0.75, "0_75"), (1.0, "1")] {
        let cname = format!("constants.a.lambda_pi={lp}");
        sink.run(&cname, || {
            Ok(Check::rel(
                cname.clone(),
                a_of_lambda(lp)?,
                fx.value(&format!("a_lambda_pi_{name}"))?,
                1e-12,
            ))
        });
    }
    sink.run("constants.a.limit_zero", || {
        Ok(Check::abs(
            "constants.a.limit_zero",
            a_limit_at_zero()?,
            fx.value("a_lambda_pi_0_limit")?,
            1e-13,
        ))
    });
    sink.run("constants.a.approach_zero", || {
        Ok(Check::abs(
            "constants.a.approach_zero",
            a_of_lambda(1e-8)?,
            0.5,
            1e-7,
        ))
    });
    sink.run("constants.b.sigma_third", || {
        Ok(Check::rel(
            "constants.b.sigma_third",
            b_coeff(1.0 / 3.0, 0.0)?,
            fx.value("b_sigma_third_nu_0")?,
            1e-12,
        ))
    });
    sink.run("constants.b.sigma_third_nu", || {
        Ok(Check::rel(
            "constants.b.sigma_third_nu",
            b_coeff(1.0 / 3.0, 0.25)?,
            fx.value("b_sigma_third_nu_0_25")?,
            1e-12,
        ))
    });
    sink.run("constants.b.two_paths", || {
        let mut worst = 0.0f64;
        for i in 0..20 {
            let s = 0.05 * i as f64;
            worst = worst.max((b_coeff(s, 0.0)? / b_coeff_ising(s)? - 1.0).abs());
        }
        Ok(Check::residual("constants.b.two_paths", worst, 1e-13))
    });
    sink.run("constants.c.half", || {
        Ok(Check::rel(
            "constants.c.half",
            c_of_nu(0.5)?,
            fx.value("c_nu_0_5")?,
            1e-13,
        ))
    });
    sink.run("constants.sigma.inverse", || {
        let mut worst = 0.0f64;
        let mut prev = -1.0;
        for i in 0..=100 {
            let lp = i as f64 / 100.0;
            let s = sigma_of_lambda(lp)?;
            if s <= prev {
                worst = f64::INFINITY;
            }
            prev = s;
            worst = worst.max((lambda_pi_of_sigma(s) - lp).abs());
        }
        Ok(Check::residual("constants.sigma.inverse", worst, 1e-14))
    });
    for (lp, tol) in [(0.3, 1e-8), (0.6, 1e-8), (0.9, 1e-7)] {
        let name = format!("constants.l_decomposition.lambda_pi={lp}");
        sink.push(
            &name,
            l_decomposition_residual(lp).map(|r| Check::residual(name.clone(), r, tol)),
        );
    }
}

/// Number of leading characters on which two decimal strings agree,
/// counting digits only.
fn common_digits(a: &str, b: &str) -> usize {
    a.chars()
        .zip(b.chars())
        .take_while(|(x, y)| x == y)
        .filter(|(x, _)| x.is_ascii_digit())
        .count()
}

const ACTION_LAMBDAS: [f64; 4] = [0.25, 0.5, 0.75, 0.95];
const ACTION_TIMES: [f64; 3] = [0.1, 1.0, 5.0];

fn action_checks(sink: &mut Sink, cfg: &SolverConfig) {
    for lp in ACTION_LAMBDAS {
        let name = format!("action.identity.lambda_pi={lp}");
        sink.run_all(&name, || {
            let p = BmtwParams::ising(lp)?;
            let res = action_identity_residuals(&ACTION_TIMES, &p, DEFAULT_LAMBDA_NODES, cfg)?;
            Ok(res
                .iter()
                .map(|r| {
                    Check::new(
                        format!("action.identity.lambda_pi={lp},t={}", r.t),
                        r.lhs,
                        r.rhs,
                        r.residual,
                        1e-6 * (1.0 + r.s.abs()),
                    )
                })
                .collect())
        });
    }
    sink.run("action.zero_member", || {
        let p = BmtwParams::ising(0.0)?;
        let s = action_s(1.0, &p, DEFAULT_LAMBDA_NODES, cfg)?;
        Ok(Check::abs("action.zero_member", s.value, 0.0, 0.0))
    });
    sink.run("action.s_vs_direct", || {
        let p = BmtwParams::ising(0.5)?;
        let s = action_s(1.0, &p, DEFAULT_LAMBDA_NODES, cfg)?;
        let traj = solve_family(&p, cfg)?;
        Ok(Check::rel(
            "action.s_vs_direct",
            s.value,
            traj.action_integral(1.0)?,
            1e-6,
        ))
    });
    sink.run("action.node_doubling", || {
        let p = BmtwParams::ising(0.75)?;
        let s = action_s(0.5, &p, 16, cfg)?;
        Ok(Check::residual("action.node_doubling", s.est_error, 1e-9))
    });
}

fn orbit_value(traj: &Trajectory, t: f64) -> Result<f64> {
    Ok(traj.at(t)?.q)
}

fn tau_checks(sink: &mut Sink, fx: &Fixtures, cfg: &SolverConfig) {
    // route agreement
    for lp in ACTION_LAMBDAS {
        let name = format!("tau.routes.lambda_pi={lp}");
        sink.run_all(&name, || {
            let p = BmtwParams::ising(lp)?;
            let traj = solve_family(&p, cfg)?;
            let mut out = Vec::new();
            for branch in [Branch::Plus, Branch::Minus] {
                let actions =
                    tau_action_many(&ACTION_TIMES, &p, branch, DEFAULT_LAMBDA_NODES, cfg)?;
                for a in actions {
                    let h = tau_hamiltonian(&traj, a.t, branch)?;
                    out.push(Check::rel(
                        format!(
                            "tau.routes.lambda_pi={lp},t={},branch={}",
                            a.t,
                            branch_name(branch)
                        ),
                        h.value,
                        a.value,
                        1e-5,
                    ));
                }
            }
            Ok(out)
        });
    }
    sink.run_all("tau.trivial", || {
        let traj = solve_family(&BmtwParams::ising(0.0)?, cfg)?;
        let minus = tau_hamiltonian(&traj, 1.0, Branch::Minus)?.value;
        let plus = tau_hamiltonian(&traj, 1.0, Branch::Plus)?.value;
        Ok(vec![
            Check::abs("tau.trivial.minus", minus, 1.0, 0.0),
            Check::abs("tau.trivial.plus", plus, 0.0, 0.0),
        ])
    });
    sink.run("tau.branch_ratio", || {
        let traj = solve_family(&BmtwParams::ising(0.5)?, cfg)?;
        let mut worst = 0.0f64;
        for t in [0.01, 0.1, 1.0, 5.0] {
            let ratio = tau_hamiltonian(&traj, t, Branch::Plus)?.value
                / tau_hamiltonian(&traj, t, Branch::Minus)?.value;
            worst = worst.max((ratio - (0.5 * traj.at(t)?.q).tanh()).abs());
        }
        Ok(Check::residual("tau.branch_ratio", worst, 1e-12))
    });
    // large-t laws
    let c40 = SolverConfig {
        t_seed: 40.0,
        ..*cfg
    };
    sink.run("tau.large_t.plus", || {
        let p = BmtwParams::ising(0.5)?;
        let traj = solve_family(&p, cfg)?;
        let v = tau_hamiltonian(&traj, 8.0, Branch::Plus)?.value;
        let d = tau_large_t(8.0, &p, Branch::Plus)?;
        Ok(Check::new(
            "tau.large_t.plus",
            v / d,
            1.0,
            (v / d - 1.0).abs(),
            5e-2,
        ))
    });
    sink.run_all("tau.large_t.minus", || {
        let p = BmtwParams::ising(0.5)?;
        let traj = solve_family(&p, &c40)?;
        let ratio = |t: f64| -> Result<f64> {
            Ok(tau_minus_excess(&traj, t)? / tau_large_t_minus_excess(t, &p)?)
        };
        let r: Vec<f64> = [8.0, 16.0, 32.0]
            .iter()
            .map(|&t| ratio(t))
            .collect::<Result<_>>()?;
        let limit = (8.0 * r[2] - 6.0 * r[1] + r[0]) / 3.0;
        let mut out = vec![Check::new(
            "tau.large_t.minus_limit",
            limit,
            1.0,
            (limit - 1.0).abs(),
            5e-2,
        )];
        for (t, name) in [
            (3.0, "large_t_minus_ratio_t3"),
            (8.0, "large_t_minus_ratio_t8"),
            (16.0, "large_t_minus_ratio_t16"),
        ] {
            out.push(Check::rel(
                format!("tau.large_t.minus_ratio.t={t}"),
                ratio(t)?,
                fx.value(name)?,
                1e-6,
            ));
        }
        Ok(out)
    });
    sink.run("tau.large_t.critical_t3", || {
        let traj = solve_family(&BmtwParams::ising(1.0)?, cfg)?;
        let v = tau_hamiltonian(&traj, 3.0, Branch::Minus)?.value;
        let expect = 1.0 + fx.value("large_t_minus_ratio_t3")? * (-6f64).exp() / (72.0 * PI);
        Ok(Check::abs("tau.large_t.critical_t3", v, expect, 1e-9))
    });
    // small-t constant and limits
    sink.run_all("tau.prefactor", || {
        let mut out = Vec::new();
        for lp in [0.25, 0.5, 0.75] {
            let traj = solve_family(&BmtwParams::ising(lp)?, cfg)?;
            let sigma = sigma_of_lambda(lp)?;
            let expected = 10f64.powf(-sigma.min(2.0 * (1.0 - sigma)));
            for branch in [Branch::Plus, Branch::Minus] {
                let samples: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
                    .iter()
                    .map(|&t| Ok((t, tau_hamiltonian(&traj, t, branch)?.value)))
                    .collect::<Result<_>>()?;
                let est = extract_prefactor(&samples, sigma)?;
                let b = branch_name(branch);
                out.push(Check::rel(
                    format!("tau.prefactor.ratio.lambda_pi={lp},branch={b}"),
                    est.decay_ratio,
                    expected,
                    0.25,
                ));
                if lp == 0.5 {
                    out.push(Check::rel(
                        format!("tau.prefactor.a_est.lambda_pi={lp},branch={b}"),
                        est.a_est,
                        a_of_lambda(lp)?,
                        0.06,
                    ));
                    out.push(Check::abs(
                        format!("tau.prefactor.window.lambda_pi={lp},branch={b}"),
                        est.decay_ratio,
                        0.45,
                        0.15,
                    ));
                }
            }
        }
        Ok(out)
    });
    sink.run_all("tau.hamiltonian_limit", || {
        let traj = solve_family(&BmtwParams::ising(0.5)?, &tight_config(cfg))?;
        let sigma = 1.0 / 3.0;
        let dev: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| {
                let pt = traj.at(t)?;
                Ok((-0.5 * t * hamiltonian(pt.q, pt.p, t) - sigma * sigma / 4.0).abs())
            })
            .collect::<Result<_>>()?;
        let expected = 10f64.powf(-2.0 * (1.0 - sigma));
        let p10 = traj.at(10.0)?;
        Ok(vec![
            Check::non_increasing("tau.hamiltonian_limit.decreasing", &dev),
            Check::rel(
                "tau.hamiltonian_limit.ratio.t=1e-3",
                dev[1] / dev[0],
                expected,
                0.25,
            ),
            Check::rel(
                "tau.hamiltonian_limit.ratio.t=1e-4",
                dev[2] / dev[1],
                expected,
                0.25,
            ),
            Check::abs(
                "tau.hamiltonian_t10",
                hamiltonian(p10.q, p10.p, 10.0),
                0.0,
                1e-9,
            ),
        ])
    });
    orbit_checks(sink, fx, cfg);
}

fn orbit_checks(sink: &mut Sink, fx: &Fixtures, cfg: &SolverConfig) {
    sink.run_all("orbit.half", || {
        let sigma = 1.0 / 3.0;
        let b = b_coeff(sigma, 0.0)?;
        let traj = solve_family(&BmtwParams::ising(0.5)?, cfg)?;
        let pt = traj.at(1e-4)?;
        Ok(vec![
            Check::abs("orbit.slope.lambda_pi=0.5", -pt.p, -sigma, 1e-3),
            Check::abs(
                "orbit.offset.lambda_pi=0.5",
                pt.q + sigma * 1e-4f64.ln(),
                -b.ln(),
                2e-3,
            ),
        ])
    });
    sink.run_all("orbit.error_order", || {
        let sigma = 1.0 / 3.0;
        let b = b_coeff(sigma, 0.0)?;
        let traj = solve_family(
            &BmtwParams::ising(0.5)?,
            &SolverConfig {
                t_min: 5e-5,
                ..tight_config(cfg)
            },
        )?;
        let e = |t: f64| -> Result<f64> { Ok(orbit_value(&traj, t)? + sigma * t.ln() + b.ln()) };
        let expected = 2f64.powf(-2.0 * (1.0 - sigma));
        [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| {
                Ok(Check::rel(
                    format!("orbit.error_order.t={t}"),
                    e(t / 2.0)? / e(t)?,
                    expected,
                    0.25,
                ))
            })
            .collect()
    });
    sink.run_all("orbit.critical", || {
        let traj = solve_family(&BmtwParams::ising(1.0)?, cfg)?;
        let tight = solve_family(&BmtwParams::ising(1.0)?, &tight_config(cfg))?;
        let res = |tr: &Trajectory, t: f64| -> Result<f64> {
            Ok((orbit_value(tr, t)? - psi_small_t_critical(t)).abs())
        };
        let seq: Vec<f64> = [0.3, 0.1, 0.03, 0.01, 1e-3]
            .iter()
            .map(|&t| res(&tight, t))
            .collect::<Result<_>>()?;
        Ok(vec![
            Check::residual("orbit.critical.t=1e-3", res(&traj, 1e-3)?, 1e-3),
            Check::non_increasing("orbit.critical.decreasing", &seq),
        ])
    });
    sink.run_all("orbit.variational", || {
        let d = 1e-5;
        let traj = solve_family(&BmtwParams::ising(0.5)?, cfg)?;
        let up = solve_family(&BmtwParams::ising(0.5 + d * PI)?, cfg)?;
        let down = solve_family(&BmtwParams::ising(0.5 - d * PI)?, cfg)?;
        [0.1, 1.0, 5.0]
            .iter()
            .map(|&t| {
                let fd = (orbit_value(&up, t)? - orbit_value(&down, t)?) / (2.0 * d);
                Ok(Check::abs(
                    format!("orbit.variational.t={t}"),
                    traj.at(t)?.chi,
                    fd,
                    1e-6,
                ))
            })
            .collect()
    });
    sink.run("orbit.seed_doubling", || {
        let p = BmtwParams::ising(0.5)?;
        let a = solve_family(
            &p,
            &SolverConfig {
                t_seed: 12.0,
                ..*cfg
            },
        )?;
        let b = solve_family(
            &p,
            &SolverConfig {
                t_seed: 24.0,
                ..*cfg
            },
        )?;
        Ok(Check::abs(
            "orbit.seed_doubling",
            orbit_value(&a, 1.0)?,
            orbit_value(&b, 1.0)?,
            1e-10,
        ))
    });
    sink.run_all("orbit.fixtures", || {
        let mut out = Vec::new();
        for lp in [0.5, 1.0] {
            let traj = solve_family(&BmtwParams::ising(lp)?, cfg)?;
            for f in fx.fixtures.iter().filter(|f| f.name.starts_with("psi_t_")) {
                if f.input("lambda_pi")? != lp {
                    continue;
                }
                let t = f.input("t")?;
                out.push(Check::rel(
                    format!("orbit.fixture.{}", f.name),
                    orbit_value(&traj, t)?,
                    f.value_f64()?,
                    1e-9,
                ));
            }
        }
        Ok(out)
    });
    sink.run("orbit.zero_member", || {
        let traj = solve_family(&BmtwParams::ising(0.0)?, cfg)?;
        let worst = (0..traj.len())
            .map(|i| {
                let n = traj.node(i);
                n.q.abs()
                    .max(n.p.abs())
                    .max(n.acc_h.abs())
                    .max(n.acc_action.abs())
                    .max(n.acc_aux.abs())
            })
            .fold(0.0, f64::max);
        Ok(Check::residual("orbit.zero_member", worst, 0.0))
    });
}

fn nu_checks(sink: &mut Sink, fx: &Fixtures, cfg: &SolverConfig) {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for nu in [0.1, 0.25, 0.45] {
        for t in [0.5, 2.0] {
            points.push((nu, t));
        }
    }
    points.push((0.25, 1.0));
    for (nu, t) in points {
        for (j, jn) in [(PiiiIndex::One, 1), (PiiiIndex::Two, 2)] {
            let name = format!("nu.action_identity.j={jn},nu={nu},t={t}");
            let terms = BmtwParams::new(0.5, nu)
                .and_then(|p| nu_action_terms(t, &p, j, DEFAULT_LAMBDA_NODES, cfg));
            match terms {
                Ok(terms) => {
                    if nu == 0.25 && t == 1.0 {
                        sink.flags.push(same_point_reading_flag(&terms, jn));
                    }
                    sink.checks.push(Check::new(
                        name,
                        terms.integral + terms.x * terms.h + terms.l,
                        terms.s,
                        terms.residual(),
                        1e-6 * (1.0 + terms.s.abs()),
                    ));
                }
                Err(e) => sink.checks.push(Check::failed(name, e)),
            }
        }
    }
    sink.run_all("nu.routes", || {
        let mut out = Vec::new();
        for nu in [0.1, 0.25, 0.45] {
            let p = BmtwParams::new(0.5, nu)?;
            let traj = solve_family(&p, cfg)?;
            for t in [0.5, 1.0, 2.0] {
                for branch in [Branch::Plus, Branch::Minus] {
                    let a = tau_nu_on(&traj, t, branch, NuRoute::G1Direct)?.value;
                    let b = tau_nu_on(&traj, t, branch, NuRoute::G10Product)?.value;
                    out.push(Check::rel(
                        format!("nu.product.nu={nu},t={t},branch={}", branch_name(branch)),
                        a,
                        b,
                        1e-7,
                    ));
                }
            }
        }
        Ok(out)
    });
    sink.run_all("nu.reduction", || {
        let p = BmtwParams::ising(0.5)?;
        let traj = solve_family(&p, cfg)?;
        let mut out = Vec::new();
        for t in [0.1, 1.0, 5.0] {
            for branch in [Branch::Plus, Branch::Minus] {
                let h = tau_hamiltonian(&traj, t, branch)?.value;
                for (route, rn) in [
                    (NuRoute::G1Direct, "direct"),
                    (NuRoute::G10Product, "product"),
                ] {
                    let v = tau_nu_on(&traj, t, branch, route)?.value;
                    out.push(Check::rel(
                        format!("nu.reduction.{rn}.t={t},branch={}", branch_name(branch)),
                        v,
                        h,
                        1e-8,
                    ));
                }
            }
        }
        Ok(out)
    });
    sink.run_all("nu.momenta", || {
        let mut out = Vec::new();
        for nu in [0.25, 1.0] {
            let p = BmtwParams::new(0.5, nu)?;
            let traj = solve_family(&p, cfg)?;
            let st = traj.piii_at(14.0)?;
            out.push(Check::abs(
                format!("nu.momenta.v1.nu={nu}"),
                st.v1,
                -(2.0 * nu + 1.0) / 2.0,
                1e-6,
            ));
            out.push(Check::abs(
                format!("nu.momenta.v2.nu={nu}"),
                st.v2,
                (2.0 * nu - 1.0) / 2.0,
                1e-6,
            ));
        }
        Ok(out)
    });
    sink.run_all("nu.expansion", || {
        let p = BmtwParams::new(0.5, 0.25)?;
        let sigma = sigma_of_lambda(0.5)?;
        let traj = solve_family(
            &p,
            &SolverConfig {
                t_min: 1e-5,
                ..tight_config(cfg)
            },
        )?;
        let res: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&t| Ok((orbit_value(&traj, t)? - psi_small_t(t, &p)?).abs()))
            .collect::<Result<_>>()?;
        let expected = 10f64.powf(-2.0 * (1.0 - sigma));
        Ok(res
            .windows(2)
            .zip([1e-3, 1e-4, 1e-5])
            .map(|(w, t)| {
                Check::rel(
                    format!("nu.expansion.ratio.t={t}"),
                    w[1] / w[0],
                    expected,
                    0.25,
                )
            })
            .collect())
    });
    sink.run_all("nu.critical", || {
        let mut out = Vec::new();
        for nu in [0.1, 0.5] {
            let p = BmtwParams::new(1.0, nu)?;
            let traj = solve_family(
                &p,
                &SolverConfig {
                    t_min: 1e-5,
                    ..tight_config(cfg)
                },
            )?;
            let res: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
                .iter()
                .map(|&t| Ok((orbit_value(&traj, t)? - psi_small_t(t, &p)?).abs()))
                .collect::<Result<_>>()?;
            out.push(Check::non_increasing(
                format!("nu.critical.decreasing.nu={nu}"),
                &res,
            ));
            out.push(Check::residual(
                format!("nu.critical.t=1e-5.nu={nu}"),
                res[4],
                1e-6,
            ));
        }
        Ok(out)
    });
    sink.run("nu.continuity", || {
        let a = solve_family(&BmtwParams::new(0.5, 1e-6)?, cfg)?;
        let b = solve_family(&BmtwParams::new(0.5, 0.0)?, cfg)?;
        let mut worst = 0.0f64;
        for t in log_grid(0.01, 10.0, 200) {
            worst = worst.max((orbit_value(&a, t)? - orbit_value(&b, t)?).abs());
        }
        Ok(Check::residual("nu.continuity", worst, 1e-4))
    });
    sink.run("nu.c_limit", || {
        let p = BmtwParams::new(1.0, 1e-6)?;
        let mut worst = 0.0f64;
        for t in [1e-4, 1e-3, 1e-2] {
            worst = worst.max((psi_small_t(t, &p)? - psi_small_t_critical(t)).abs());
        }
        Ok(Check::residual("nu.c_limit", worst, 1e-4))
    });
    sink.run("nu.large_t.plus", || {
        let p = BmtwParams::new(0.5, 0.25)?;
        let traj = solve_family(&p, cfg)?;
        let v = tau_nu_on(&traj, 8.0, Branch::Plus, NuRoute::G1Direct)?.value;
        let ratio = v / tau_large_t(8.0, &p, Branch::Plus)?;
        Ok(Check::rel(
            "nu.large_t.plus",
            ratio,
            fx.value("large_t_plus_ratio_t8_nu_0_25")?,
            1e-6,
        ))
    });
    // the nu display for tau_minus carries a factor nu; its nu -> 0 limit is
    // not the nu = 0 display
    match (|| -> Result<Flag> {
        let t = 8.0;
        let small = tau_large_t_minus_excess(t, &BmtwParams::new(0.5, 1e-6)?)?;
        let zero = tau_large_t_minus_excess(t, &BmtwParams::ising(0.5)?)?;
        Ok(Flag {
            name: "nu.large_t.minus_display_mismatch".into(),
            lhs: small,
            rhs: zero,
            detail: "tau_minus - 1 at t = 8: nu display at nu = 1e-6 (lhs) vs the nu = 0 display (rhs); \
                     the nu display vanishes with nu, the nu = 0 display does not"
                .into(),
        })
    })() {
        Ok(f) => sink.flags.push(f),
        Err(e) => sink
            .checks
            .push(Check::failed("nu.large_t.minus_display_mismatch", e)),
    }
}

fn same_point_reading_flag(terms: &crate::tau::NuActionTerms, j: usize) -> Flag {
    Flag {
        name: format!("nu.action_identity.reading.j={j}"),
        lhs: terms.residual(),
        rhs: terms.residual_mixed(),
        detail: "identity residual with every term at x = t/2 (lhs) vs the reading with coefficient t on H_j (rhs)"
            .into(),
    }
}

fn fredholm_checks(sink: &mut Sink, fx: &Fixtures, cfg: &SolverConfig) {
    sink.run_all("fredholm.ode", || {
        let traj = solve_family(&BmtwParams::ising(1.0)?, cfg)?;
        [0.5, 1.0, 2.0]
            .iter()
            .map(|&t| {
                let f = fredholm_tau_minus(t, 200, None)?.value;
                let h = tau_hamiltonian(&traj, t, Branch::Minus)?.value;
                Ok(Check::rel(format!("fredholm.ode.t={t}"), f, h, 1e-5))
            })
            .collect()
    });
    sink.run("fredholm.large_t", || {
        Ok(Check::abs(
            "fredholm.large_t",
            fredholm_tau_minus(8.0, 200, None)?.value,
            1.0,
            1e-6,
        ))
    });
    sink.run("fredholm.doubling", || {
        let a = fredholm_tau_minus(0.5, 200, None)?.value;
        let b = fredholm_tau_minus(0.5, 400, None)?.value;
        Ok(Check::abs("fredholm.doubling", a, b, 1e-7))
    });
    sink.run("fredholm.fixture", || {
        Ok(Check::rel(
            "fredholm.fixture",
            det_one_minus_k_squared(1.0, 200, None)?,
            fx.value("fredholm_det_one_minus_k_squared_t1")?,
            1e-12,
        ))
    });
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

/// Compare every fixture of `fx` that this crate can evaluate against the
/// implementation; unknown names become failed checks.
pub fn fixture_checks(fx: &Fixtures, cfg: &SolverConfig) -> Vec<Check> {
    let mut out: Vec<Check> = fx
        .fixtures
        .iter()
        .map(|f| {
            let name = format!("fixture.{}", f.name);
            let r = (|| -> Result<Check> {
                let reference = f.value_f64()?;
                let (value, tol) = evaluate_fixture(&f.name, f, cfg)?;
                Ok(Check::new(
                    name.clone(),
                    value,
                    reference,
                    (value / reference - 1.0).abs(),
                    tol,
                ))
            })();
            r.unwrap_or_else(|e| Check::failed(name, e))
        })
        .collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

fn evaluate_fixture(
    name: &str,
    f: &crate::fixtures::Fixture,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let c = FundamentalConstants::get();
    let unknown = || crate::error::Error::Config(format!("no evaluator for fixture {name}"));
    Ok(match name {
        "const_euler_gamma" => (c.euler_gamma, 1e-15),
        "const_zeta_prime_minus_one" => (c.zeta_prime_minus_one, 1e-15),
        "const_ln_two" => (c.ln_two, 1e-15),
        "const_ln_pi" => (c.ln_pi, 1e-15),
        "const_sqrt_pi" => (c.sqrt_pi, 1e-15),
        "k0_t1" | "k0_t2" => (bessel_k(0, f.input("t")?)?, 1e-12),
        "k1_t2" => (bessel_k(1, f.input("t")?)?, 1e-12),
        "ln_gamma_third" => (ln_gamma(f.input("x")?)?, 1e-13),
        "ln_barnes_g_half" => (ln_barnes_g(f.input("x")?)?, 1e-12),
        "bc_integral_t1_nu_0_25" => (bc_integral(f.input("t")?, f.input("nu")?, false)?.0, 1e-10),
        "b_sigma_third_nu_0" | "b_sigma_third_nu_0_25" => {
            (b_coeff(f.input("sigma")?, f.input("nu")?)?, 1e-12)
        }
        "wu_constant" => (wu_constant(), 1e-14),
        "c_nu_0_5" => (c_of_nu(f.input("nu")?)?, 1e-13),
        "a_lambda_pi_0_limit" => (a_limit_at_zero()?, 1e-13),
        n if n.starts_with("a_lambda_pi_") => (a_of_lambda(f.input("lambda_pi")?)?, 1e-12),
        n if n.starts_with("large_t_minus_ratio_") => {
            let p = BmtwParams::ising(0.5)?;
            let t = f.input("t")?;
            let traj = solve_family(
                &p,
                &SolverConfig {
                    t_seed: 40.0,
                    ..*cfg
                },
            )?;
            (
                tau_minus_excess(&traj, t)? / tau_large_t_minus_excess(t, &p)?,
                1e-6,
            )
        }
        n if n.starts_with("large_t_plus_ratio_") => {
            let p = BmtwParams::new(0.5, f.input("nu")?)?;
            let t = f.input("t")?;
            let traj = solve_family(&p, cfg)?;
            let v = tau_nu_on(&traj, t, Branch::Plus, NuRoute::G1Direct)?.value;
            (v / tau_large_t(t, &p, Branch::Plus)?, 1e-6)
        }
        "fredholm_det_one_minus_k_squared_t1" => {
            (det_one_minus_k_squared(f.input("t")?, 200, None)?, 1e-12)
        }
        n if n.starts_with("psi_t_") => {
            let traj = solve_family(&BmtwParams::ising(f.input("lambda_pi")?)?, cfg)?;
            (orbit_value(&traj, f.input("t")?)?, 1e-9)
        }
        _ => return Err(unknown()),
    })
}
