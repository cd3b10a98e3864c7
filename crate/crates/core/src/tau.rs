//! tau_plus / tau_minus and the nu-deformed tau function by independent
//! routes, plus the residuals of the action identities that connect them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::solver::{
    hamiltonian, piii_state, solve_family, BmtwParams, OrbitPoint, SolverConfig, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// sinh(q/2) or cosh(q/2).
    pub fn factor(self, q: f64) -> f64 {
        match self {
            Branch::Plus => (0.5 * q).sinh(),
            Branch::Minus => (0.5 * q).cosh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Hamiltonian,
    Action,
    NuProduct,
    Fredholm,
    AsymptoticSmallT,
    AsymptoticLargeT,
}

/// Evaluation routes for the nu-deformed tau function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuRoute {
    /// exp of the sinh-Gordon integrand plus the nu-weighted auxiliary integral
    G1Direct,
    /// exp of minus the combination of the two Painleve-III Hamiltonians
    G10Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauValue {
    pub t: f64,
    pub params: BmtwParams,
    pub branch: Branch,
    pub route: Route,
    pub value: f64,
    pub est_error: f64,
}

/// A quadrature value with a refinement-delta error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub est_error: f64,
}

pub const DEFAULT_LAMBDA_NODES: usize = 16;
/// Tolerance refinement used for the est_error of single-orbit routes.
const REFINE: f64 = 1e-2;

fn refined(config: &SolverConfig) -> SolverConfig {
    SolverConfig {
        rel_tol: config.rel_tol * REFINE,
        abs_tol: config.abs_tol * REFINE,
        ..*config
    }
}

fn hamiltonian_value(traj: &Trajectory, t: f64, branch: Branch) -> Result<f64> {
    let pt = traj.at(t)?;
    Ok((0.5 * (pt.acc_h + traj.tail_h)).exp() * branch.factor(pt.q))
}

/// exp[(1/2) int_t^inf H ds] times sinh(q/2) or cosh(q/2).
pub fn tau_hamiltonian(traj: &Trajectory, t: f64, branch: Branch) -> Result<TauValue> {
    let value = hamiltonian_value(traj, t, branch)?;
    let fine = solve_family(&traj.params, &refined(&traj.config))?;
    let est_error = (hamiltonian_value(&fine, t, branch)? - value).abs();
    Ok(TauValue {
        t,
        params: traj.params,
        branch,
        route: Route::Hamiltonian,
        value,
        est_error,
    })
}

/// int_0^lambda f(orbit at lambda', t) dlambda' for every t in `ts`, with the
/// substitution lambda' pi = sin(pi sigma' / 2) and `n` Gauss-Legendre nodes
/// in sigma'. Orbits are solved in parallel; sums run in node order.
pub fn lambda_quadrature<F>(
    ts: &[f64],
    params: &BmtwParams,
    n: usize,
    config: &SolverConfig,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&OrbitPoint, f64) -> Result<f64> + Sync,
{
    if n < 4 {
        return Err(Error::Config(format!(
            "need at least 4 lambda nodes, got {n}"
        )));
    }
    params.validate()?;
    if params.lambda_pi == 0.0 || ts.is_empty() {
        return Ok(vec![0.0; ts.len()]);
    }
    let t_low = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let config = config.reaching(t_low);
    let sigma = crate::asymptotics::sigma_of_lambda(params.lambda_pi)?;
    let rule = GaussLegendre::new(n);
    let nodes: Vec<(f64, f64)> = rule.mapped(0.0, sigma).collect();
    let rows: Vec<Result<Vec<f64>>> = nodes
        .par_iter()
        .map(|&(s, w)| {
            let lp = (0.5 * PI * s).sin();
            let jac = 0.5 * (0.5 * PI * s).cos();
            let traj = solve_family(&params.with_lambda_pi(lp), &config)?;
            ts.iter()
                .map(|&t| Ok(w * jac * f(&traj.at(t)?, params.nu)?))
                .collect()
        })
        .collect();
    let mut out = vec![0.0; ts.len()];
    for row in rows {
        for (o, v) in out.iter_mut().zip(row?) {
            *o += v;
        }
    }
    Ok(out)
}

/// `lambda_quadrature` at n and 2n nodes; value from 2n, error from the delta.
pub fn lambda_quadrature_doubled<F>(
    ts: &[f64],
    params: &BmtwParams,
    n: usize,
    config: &SolverConfig,
    f: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&OrbitPoint, f64) -> Result<f64> + Sync,
{
    let coarse = lambda_quadrature(ts, params, n, config, &f)?;
    let fine = lambda_quadrature(ts, params, 2 * n, config, &f)?;
    Ok(coarse
        .into_iter()
        .zip(fine)
        .map(|(c, f)| Estimate {
            value: f,
            est_error: (f - c).abs(),
        })
        .collect())
}

fn action_integrand(pt: &OrbitPoint, _nu: f64) -> Result<f64> {
    Ok(-pt.p * pt.chi)
}

/// Classical action S(t, lambda) = -int_0^lambda p dq/dlambda' dlambda' at each t.
pub fn action_s_many(
    ts: &[f64],
    params: &BmtwParams,
    n: usize,
    config: &SolverConfig,
) -> Result<Vec<Estimate>> {
    lambda_quadrature_doubled(ts, params, n, config, action_integrand)
}

/// Classical action S(t, lambda) with a node-doubling error estimate.
pub fn action_s(t: f64, params: &BmtwParams, n: usize, config: &SolverConfig) -> Result<Estimate> {
    Ok(action_s_many(&[t], params, n, config)?[0])
}

fn require_ising(params: &BmtwParams) -> Result<()> {
    if params.nu != 0.0 {
        return Err(Error::Config(format!(
            "the action formula is stated for nu = 0, got nu = {}",
            params.nu
        )));
    }
    Ok(())
}

/// Action-formula tau for several t at once.
pub fn tau_action_many(
    ts: &[f64],
    params: &BmtwParams,
    branch: Branch,
    n: usize,
    config: &SolverConfig,
) -> Result<Vec<TauValue>> {
    require_ising(params)?;
    let s = action_s_many(ts, params, n, config)?;
    let traj = solve_family(
        params,
        &config.reaching(ts.iter().cloned().fold(f64::INFINITY, f64::min)),
    )?;
    ts.iter()
        .zip(s)
        .map(|(&t, s)| {
            let pt = traj.at(t)?;
            let expo = -0.5 * t * hamiltonian(pt.q, pt.p, t) + 0.5 * s.value;
            let value = expo.exp() * branch.factor(pt.q);
            Ok(TauValue {
                t,
                params: *params,
                branch,
                route: Route::Action,
                value,
                est_error: 0.5 * value.abs() * s.est_error,
            })
        })
        .collect()
}

/// exp[-(t/2) H(q, p, t) + S/2] times sinh(q/2) or cosh(q/2).
pub fn tau_action(
    t: f64,
    params: &BmtwParams,
    branch: Branch,
    n: usize,
    config: &SolverConfig,
) -> Result<TauValue> {
    Ok(tau_action_many(&[t], params, branch, n, config)?[0])
}

/// |int_t^inf H ds - (-t H + S)| for several t.
pub fn action_identity_residuals(
    ts: &[f64],
    params: &BmtwParams,
    n: usize,
    config: &SolverConfig,
) -> Result<Vec<ActionResidual>> {
    require_ising(params)?;
    let s = action_s_many(ts, params, n, config)?;
    let traj = solve_family(
        params,
        &config.reaching(ts.iter().cloned().fold(f64::INFINITY, f64::min)),
    )?;
    ts.iter()
        .zip(s)
        .map(|(&t, s)| {
            let pt = traj.at(t)?;
            let lhs = pt.acc_h + traj.tail_h;
            let rhs = -t * hamiltonian(pt.q, pt.p, t) + s.value;
            Ok(ActionResidual {
                t,
                lhs,
                rhs,
                s: s.value,
                residual: (lhs - rhs).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionResidual {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub s: f64,
    pub residual: f64,
}

/// |int_t^inf H ds - (-t H + S)|.
pub fn action_identity_residual(
    t: f64,
    params: &BmtwParams,
    n: usize,
    config: &SolverConfig,
) -> Result<f64> {
    Ok(action_identity_residuals(&[t], params, n, config)?[0].residual)
}

/// tau_minus - 1 without cancellation against 1 (needs t below t_seed).
pub fn tau_minus_excess(traj: &Trajectory, t: f64) -> Result<f64> {
    let pt = traj.at(t)?;
    let h = (0.25 * pt.q).sinh();
    let ln_cosh = (2.0 * h * h).ln_1p();
    Ok((0.5 * (pt.acc_h + traj.tail_h) + ln_cosh).exp_m1())
}

fn nu_exponent(traj: &Trajectory, t: f64, route: NuRoute) -> Result<f64> {
    let nu = traj.params.nu;
    match route {
        NuRoute::G1Direct => {
            let pt = traj.at(t)?;
            Ok(0.5 * (pt.acc_h + traj.tail_h) + 0.5 * nu * (pt.acc_aux + traj.tail_aux))
        }
        NuRoute::G10Product => {
            // dx = ds / 2
            let integral = traj.integrate_along(t, |s, q, p| match piii_state(s, q, p, nu) {
                Ok(st) => 0.5 * (0.5 * (1.0 - nu) * st.h1 + 0.5 * (1.0 + nu) * st.h2),
                Err(_) => f64::NAN,
            })?;
            if !integral.is_finite() {
                return Err(Error::Overflow { t });
            }
            Ok(-integral)
        }
    }
}

fn nu_value(traj: &Trajectory, t: f64, branch: Branch, route: NuRoute) -> Result<f64> {
    Ok(nu_exponent(traj, t, route)?.exp() * branch.factor(traj.at(t)?.q))
}

/// nu-deformed tau function on a solved orbit.
pub fn tau_nu_on(traj: &Trajectory, t: f64, branch: Branch, route: NuRoute) -> Result<TauValue> {
    let value = nu_value(traj, t, branch, route)?;
    let fine = solve_family(&traj.params, &refined(&traj.config))?;
    let est_error = (nu_value(&fine, t, branch, route)? - value).abs();
    Ok(TauValue {
        t,
        params: traj.params,
        branch,
        route: match route {
            NuRoute::G1Direct => Route::Hamiltonian,
            NuRoute::G10Product => Route::NuProduct,
        },
        value,
        est_error,
    })
}

/// nu-deformed tau function tau_plus / tau_minus (t, lambda, nu).
pub fn tau_nu(
    t: f64,
    params: &BmtwParams,
    branch: Branch,
    route: NuRoute,
    config: &SolverConfig,
) -> Result<TauValue> {
    let traj = solve_family(params, &config.reaching(t))?;
    tau_nu_on(&traj, t, branch, route)
}

/// Which Painleve-III Hamiltonian an action identity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PiiiIndex {
    One,
    Two,
}

/// Terms of the Painleve-III action identity at one point, all taken at x = t/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuActionTerms {
    pub x: f64,
    /// int_x^inf H_j dx'
    pub integral: f64,
    /// H_j(x)
    pub h: f64,
    pub l: f64,
    pub s: f64,
    pub s_error: f64,
}

impl NuActionTerms {
    /// |int_x^inf H_j + x H_j(x) + L_j - S_j|.
    pub fn residual(&self) -> f64 {
        (self.integral + self.x * self.h + self.l - self.s).abs()
    }

    /// The same combination with the coefficient of H_j read as t = 2x.
    pub fn residual_mixed(&self) -> f64 {
        (self.integral + 2.0 * self.x * self.h + self.l - self.s).abs()
    }
}

/// Evaluate the terms of the Painleve-III action identity for H_j at x = t/2.
pub fn nu_action_terms(
    t: f64,
    params: &BmtwParams,
    j: PiiiIndex,
    n: usize,
    config: &SolverConfig,
) -> Result<NuActionTerms> {
    let nu = params.nu;
    let config = config.reaching(t);
    let traj = solve_family(params, &config)?;
    let st = traj.piii_at(t)?;
    let integral = 0.5
        * traj.integrate_along(t, |s, q, p| match piii_state(s, q, p, nu) {
            Ok(st) => match j {
                PiiiIndex::One => st.h1,
                PiiiIndex::Two => st.h2,
            },
            Err(_) => f64::NAN,
        })?;
    if !integral.is_finite() {
        return Err(Error::Overflow { t });
    }
    let aux = traj.aux_integral(t)?;
    let ln_u = st.u.ln();
    let l = match j {
        PiiiIndex::One => 0.5 * (2.0 * nu + 1.0) * (ln_u + aux),
        PiiiIndex::Two => 0.5 * (2.0 * nu - 1.0) * (aux - ln_u),
    };
    // S_j = -int v_j du/dlambda' with du/dlambda' = -u chi
    let s = lambda_quadrature_doubled(&[t], params, n, &config, |pt, nu| {
        let st = piii_state(pt.t, pt.q, pt.p, nu)?;
        let v = match j {
            PiiiIndex::One => st.v1,
            PiiiIndex::Two => st.v2,
        };
        Ok(v * st.u * pt.chi)
    })?[0];
    let h = match j {
        PiiiIndex::One => st.h1,
        PiiiIndex::Two => st.h2,
    };
    Ok(NuActionTerms {
        x: st.x,
        integral,
        h,
        l,
        s: s.value,
        s_error: s.est_error,
    })
}

/// |int_x^inf H_j dx + x H_j(x) + L_j - S_j| at x = t/2.
pub fn nu_action_residual(
    t: f64,
    params: &BmtwParams,
    j: PiiiIndex,
    n: usize,
    config: &SolverConfig,
) -> Result<f64> {
    Ok(nu_action_terms(t, params, j, n, config)?.residual())
}
