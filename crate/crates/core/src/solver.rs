//! Backward integration of the BMTW family of the (nu-modified) radial
//! sinh-Gordon equation
//!
//! ```text
//! q'' + q'/t = (1/2) sinh 2q + (2 nu / t) sinh q,    q(t) ~ 2 lambda I(t, nu), t -> inf
//! ```
//!
//! in Hamiltonian form (q, p = -t q'), together with the variational pair
//! (chi, chi_p) = d(q, p)/d lambda and three running quadratures that the tau
//! routes consume. Above `log_switch` the independent variable is t, below it
//! is ln t; the state vector is the same in both regimes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, DenseSolution, DenseStep, Failure};
use crate::quadrature::GaussLegendre;
use crate::specfn::bc_integral;

/// Largest nu accepted by the solver.
pub const NU_MAX: f64 = 4.0;
/// Seeds whose boundary value exceeds this are rejected.
pub const SEED_MAX_VALUE: f64 = 1e-5;

/// Coordinates of a member of the solution family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmtwParams {
    /// The product lambda * pi, in [0, 1].
    pub lambda_pi: f64,
    pub nu: f64,
}

impl BmtwParams {
    pub fn new(lambda_pi: f64, nu: f64) -> Result<Self> {
        let p = Self { lambda_pi, nu };
        p.validate()?;
        Ok(p)
    }

    /// The sinh-Gordon (Ising) case nu = 0.
    pub fn ising(lambda_pi: f64) -> Result<Self> {
        Self::new(lambda_pi, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_pi) {
            return Err(Error::Config(format!(
                "lambda_pi must lie in [0, 1], got {}",
                self.lambda_pi
            )));
        }
        if !(self.nu > -0.5 && self.nu <= NU_MAX) {
            return Err(Error::Config(format!(
                "nu must lie in (-1/2, {NU_MAX}], got {}",
                self.nu
            )));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_pi / PI
    }

    pub fn with_lambda_pi(&self, lambda_pi: f64) -> Self {
        Self { lambda_pi, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub t_seed: f64,
    pub t_min: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub log_switch: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_seed: 14.0,
            t_min: 1e-4,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            log_switch: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.t_min > 0.0
            && self.t_min < self.log_switch
            && self.log_switch < self.t_seed
            && self.t_seed.is_finite();
        if !ok {
            return Err(Error::Config(format!(
                "need 0 < t_min ({}) < log_switch ({}) < t_seed ({})",
                self.t_min, self.log_switch, self.t_seed
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Copy of this configuration reaching at least down to `t`.
    pub fn reaching(&self, t: f64) -> Self {
        let mut c = *self;
        if t < c.t_min {
            c.t_min = t;
        }
        if c.t_min >= c.log_switch {
            c.log_switch = 0.5 * (c.t_min + c.t_seed).min(2.0 * c.t_min.max(1e-300));
        }
        c
    }
}

/// Contributions of [t_seed, inf) to the three running quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Tails {
    pub h: f64,
    pub action: f64,
    pub aux: f64,
}

/// Linearized orbit beyond the seed point, sampled on a Gauss-Legendre grid.
#[derive(Debug, Clone, Default)]
pub struct TailGrid {
    /// (t, weight, q, p) with q = 2 lambda I(t), p = -t dq/dt.
    pub nodes: Vec<(f64, f64, f64, f64)>,
}

/// Initial data at the seed point.
#[derive(Debug, Clone)]
pub struct Seed {
    pub q0: f64,
    pub p0: f64,
    pub chi0: f64,
    pub chip0: f64,
    pub tails: Tails,
    pub tail_grid: TailGrid,
}

const TAIL_LENGTH: f64 = 30.0;
const TAIL_NODES: usize = 48;

/// Boundary data at `t_seed` from the linearized large-t behaviour
/// q ~ 2 lambda I(t, nu), plus the tails of the running quadratures.
pub fn seed_at_infinity(params: &BmtwParams, t_seed: f64) -> Result<Seed> {
    params.validate()?;
    let lambda = params.lambda();
    let (i0, di0) = bc_integral(t_seed, params.nu, true)?;
    let di0 = di0.unwrap_or(0.0);
    let q0 = 2.0 * lambda * i0;
    if q0.abs() > SEED_MAX_VALUE {
        return Err(Error::SeedTooSmall { t_seed, value: q0 });
    }
    let chi0 = 2.0 * i0;
    let chip0 = -t_seed * 2.0 * di0;

    let rule = GaussLegendre::new(TAIL_NODES);
    let mut nodes = Vec::with_capacity(TAIL_NODES);
    let mut tails = Tails::default();
    for (s, w) in rule.mapped(t_seed, t_seed + TAIL_LENGTH) {
        let (i, di) = bc_integral(s, params.nu, true)?;
        let q = 2.0 * lambda * i;
        let p = -s * 2.0 * lambda * di.unwrap_or(0.0);
        let sinh2 = q * q;
        let kinetic = p * p / (2.0 * s);
        tails.h += w * (0.5 * s * sinh2 - kinetic);
        tails.action += w * (-kinetic - 0.5 * s * sinh2);
        tails.aux += w * 0.5 * q * q;
        nodes.push((s, w, q, p));
    }
    Ok(Seed {
        q0,
        p0: lambda * chip0,
        chi0,
        chip0,
        tails,
        tail_grid: TailGrid { nodes },
    })
}

/// H(q, p, t) = (t/2) sinh^2 q - p^2 / (2t).
pub fn hamiltonian(q: f64, p: f64, t: f64) -> f64 {
    let s = q.sinh();
    0.5 * t * s * s - p * p / (2.0 * t)
}

pub(crate) const STATE_DIM: usize = 7;
type State = [f64; STATE_DIM];

const IQ: usize = 0;
const IP: usize = 1;
const ICHI: usize = 2;
const ICHIP: usize = 3;
const IACC_H: usize = 4;
const IACC_ACTION: usize = 5;
const IACC_AUX: usize = 6;

/// Derivatives with respect to t.
fn rhs_t(t: f64, y: &State, nu: f64) -> State {
    let q = y[IQ];
    let p = y[IP];
    let sh = q.sinh();
    let ch = q.cosh();
    let sinh2 = sh * sh;
    let half = (0.5 * q).sinh();
    let h = 0.5 * t * sinh2 - p * p / (2.0 * t);
    [
        -p / t,
        -t * sh * ch - 2.0 * nu * sh,
        -y[ICHIP] / t,
        -(t * (ch * ch + sinh2) + 2.0 * nu * ch) * y[ICHI],
        -h,
        p * p / (2.0 * t) + 0.5 * t * sinh2,
        -2.0 * half * half,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clock {
    /// independent variable t
    Linear,
    /// independent variable ln t
    Log,
}

impl Clock {
    fn t_of(self, x: f64) -> f64 {
        match self {
            Clock::Linear => x,
            Clock::Log => x.exp(),
        }
    }

    fn x_of(self, t: f64) -> f64 {
        match self {
            Clock::Linear => t,
            Clock::Log => t.ln(),
        }
    }

    fn dt_dx(self, t: f64) -> f64 {
        match self {
            Clock::Linear => 1.0,
            Clock::Log => t,
        }
    }
}

#[derive(Debug, Clone)]
struct Segment {
    clock: Clock,
    sol: DenseSolution<STATE_DIM>,
    t_lo: f64,
    t_hi: f64,
}

/// Orbit state at a single t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    pub chi: f64,
    pub chi_p: f64,
    pub acc_h: f64,
    pub acc_action: f64,
    pub acc_aux: f64,
}

impl OrbitPoint {
    fn from_state(t: f64, y: &State) -> Self {
        Self {
            t,
            q: y[IQ],
            p: y[IP],
            chi: y[ICHI],
            chi_p: y[ICHIP],
            acc_h: y[IACC_H],
            acc_action: y[IACC_ACTION],
            acc_aux: y[IACC_AUX],
        }
    }
}

/// A solved orbit on [t_min, t_seed] with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: BmtwParams,
    pub config: SolverConfig,
    /// Accepted step end points, strictly increasing.
    pub grid: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub chi: Vec<f64>,
    pub chi_p: Vec<f64>,
    pub acc_h: Vec<f64>,
    pub acc_action: Vec<f64>,
    pub acc_aux: Vec<f64>,
    pub tail_h: f64,
    pub tail_action: f64,
    pub tail_aux: f64,
    tail_grid: TailGrid,
    segments: Vec<Segment>,
}

fn map_failure(f: Failure, clock: Clock) -> Error {
    match f {
        Failure::StepUnderflow { x } => Error::StepUnderflow { t: clock.t_of(x) },
        Failure::NonFinite { x } => Error::Overflow { t: clock.t_of(x) },
        Failure::MaxSteps { x, steps } => Error::MaxSteps {
            steps,
            t: clock.t_of(x),
        },
    }
}

/// Integrate the family member `params` from `t_seed` down to `t_min`.
pub fn solve_family(params: &BmtwParams, config: &SolverConfig) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    let nu = params.nu;
    let seed = seed_at_infinity(params, config.t_seed)?;
    let opts = ode::Options {
        rtol: config.rel_tol,
        atol: config.abs_tol,
        ..ode::Options::default()
    };

    let mut y0: State = [0.0; STATE_DIM];
    y0[IQ] = seed.q0;
    y0[IP] = seed.p0;
    y0[ICHI] = seed.chi0;
    y0[ICHIP] = seed.chip0;

    // absolute tolerances follow the seed scale so that the exponentially
    // small linear regime is resolved in relative terms
    let m_q = seed.q0.abs().max(seed.p0.abs());
    let m_chi = seed.chi0.abs().max(seed.chip0.abs());
    let floor = f64::MIN_POSITIVE;
    let atol: State = [
        (config.abs_tol * m_q).max(floor),
        (config.abs_tol * m_q).max(floor),
        (config.abs_tol * m_chi).max(floor),
        (config.abs_tol * m_chi).max(floor),
        (config.abs_tol * m_q * m_q).max(floor),
        (config.abs_tol * m_q * m_q).max(floor),
        (config.abs_tol * m_q * m_q).max(floor),
    ];

    let mut segments = Vec::with_capacity(2);
    let mut start = y0;
    for (clock, t_from, t_to) in [
        (Clock::Linear, config.t_seed, config.log_switch),
        (Clock::Log, config.log_switch, config.t_min),
    ] {
        let rhs = |x: f64, y: &State| -> State {
            let t = clock.t_of(x);
            let f = clock.dt_dx(t);
            let mut d = rhs_t(t, y, nu);
            for v in d.iter_mut() {
                *v *= f;
            }
            d
        };
        let sol = ode::integrate_with_atol(
            rhs,
            clock.x_of(t_from),
            start,
            clock.x_of(t_to),
            &opts,
            &atol,
        )
        .map_err(|e| map_failure(e, clock))?;
        start = sol.steps.last().map(|s| s.end()).unwrap_or(start);
        segments.push(Segment {
            clock,
            sol,
            t_lo: t_to,
            t_hi: t_from,
        });
    }

    // node table in increasing t
    let mut nodes: Vec<(f64, State)> = Vec::new();
    for seg in segments.iter().rev() {
        for step in seg.sol.steps.iter().rev() {
            nodes.push((seg.clock.t_of(step.x1()), step.end()));
        }
    }
    nodes.push((config.t_seed, y0));
    nodes[0].0 = config.t_min;
    let len = nodes.len();
    let mut traj = Trajectory {
        params: *params,
        config: *config,
        grid: Vec::with_capacity(len),
        q: Vec::with_capacity(len),
        p: Vec::with_capacity(len),
        chi: Vec::with_capacity(len),
        chi_p: Vec::with_capacity(len),
        acc_h: Vec::with_capacity(len),
        acc_action: Vec::with_capacity(len),
        acc_aux: Vec::with_capacity(len),
        tail_h: seed.tails.h,
        tail_action: seed.tails.action,
        tail_aux: seed.tails.aux,
        tail_grid: seed.tail_grid,
        segments,
    };
    for (t, y) in nodes {
        if let Some(&last) = traj.grid.last() {
            if t <= last {
                continue;
            }
        }
        traj.grid.push(t);
        traj.q.push(y[IQ]);
        traj.p.push(y[IP]);
        traj.chi.push(y[ICHI]);
        traj.chi_p.push(y[ICHIP]);
        traj.acc_h.push(y[IACC_H]);
        traj.acc_action.push(y[IACC_ACTION]);
        traj.acc_aux.push(y[IACC_AUX]);
    }
    Ok(traj)
}

impl Trajectory {
    pub fn t_min(&self) -> f64 {
        self.config.t_min
    }

    pub fn t_seed(&self) -> f64 {
        self.config.t_seed
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn node(&self, i: usize) -> OrbitPoint {
        OrbitPoint {
            t: self.grid[i],
            q: self.q[i],
            p: self.p[i],
            chi: self.chi[i],
            chi_p: self.chi_p[i],
            acc_h: self.acc_h[i],
            acc_action: self.acc_action[i],
            acc_aux: self.acc_aux[i],
        }
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let lo = self.t_min();
        let hi = self.t_seed();
        let slack = 1e-12 * hi;
        if t.is_nan() || t < lo * (1.0 - 1e-12) || t > hi + slack {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        Ok(())
    }

    fn segment_for(&self, t: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| t >= s.t_lo)
            .unwrap_or_else(|| self.segments.last().expect("trajectory has segments"))
    }

    /// Interpolated orbit state (dense output) at `t`.
    pub fn at(&self, t: f64) -> Result<OrbitPoint> {
        self.check_range(t)?;
        let t = t.clamp(self.t_min(), self.t_seed());
        let seg = self.segment_for(t);
        let x = seg.clock.x_of(t);
        let y = seg
            .sol
            .eval(x)
            .or_else(|| {
                // end-point round-off in the ln t map
                let first = seg.sol.steps.first()?;
                let last = seg.sol.steps.last()?;
                if (x - first.x0).abs() < (x - last.x1()).abs() {
                    Some(first.start())
                } else {
                    Some(last.end())
                }
            })
            .ok_or(Error::OutOfRange {
                t,
                lo: self.t_min(),
                hi: self.t_seed(),
            })?;
        Ok(OrbitPoint::from_state(t, &y))
    }

    /// int_t^inf H ds (running quadrature plus tail).
    pub fn hamiltonian_integral(&self, t: f64) -> Result<f64> {
        Ok(self.at(t)?.acc_h + self.tail_h)
    }

    /// int_t^inf (p q' - H) ds.
    pub fn action_integral(&self, t: f64) -> Result<f64> {
        Ok(self.at(t)?.acc_action + self.tail_action)
    }

    /// int_{t/2}^inf u^{-1} (1-u)^2 dx with u = e^{-q}, x = s/2.
    pub fn aux_integral(&self, t: f64) -> Result<f64> {
        Ok(self.at(t)?.acc_aux + self.tail_aux)
    }

    /// int_{t_lo}^inf f(s, q(s), p(s)) ds by Gauss-Legendre quadrature over
    /// the dense output of every step, plus the linearized tail.
    pub fn integrate_along<F: Fn(f64, f64, f64) -> f64>(&self, t_lo: f64, f: F) -> Result<f64> {
        self.check_range(t_lo)?;
        let rule = GaussLegendre::new(8);
        let mut total = 0.0;
        for seg in &self.segments {
            if t_lo >= seg.t_hi {
                continue;
            }
            let x_cut = seg.clock.x_of(t_lo.max(seg.t_lo));
            for step in &seg.sol.steps {
                total += integrate_step(step, seg.clock, x_cut, &rule, &f);
            }
        }
        for &(s, w, q, p) in &self.tail_grid.nodes {
            total += w * f(s, q, p);
        }
        Ok(total)
    }

    /// Painleve-III coordinates at grid node `node`.
    pub fn to_piii(&self, node: usize) -> Result<PiiiState> {
        if node >= self.len() {
            return Err(Error::OutOfRange {
                t: node as f64,
                lo: 0.0,
                hi: self.len() as f64,
            });
        }
        piii_state(self.grid[node], self.q[node], self.p[node], self.params.nu)
    }

    /// Painleve-III coordinates at an arbitrary t in range.
    pub fn piii_at(&self, t: f64) -> Result<PiiiState> {
        let pt = self.at(t)?;
        piii_state(t, pt.q, pt.p, self.params.nu)
    }
}

/// Integral of `f dt` over the part of `step` with x beyond `x_cut` towards
/// the step's start (steps run backward in t).
fn integrate_step<F: Fn(f64, f64, f64) -> f64>(
    step: &DenseStep<STATE_DIM>,
    clock: Clock,
    x_cut: f64,
    rule: &GaussLegendre,
    f: &F,
) -> f64 {
    // x decreases along the step: [x1, x0] with x1 = x0 + h, h < 0
    let hi = step.x0;
    let lo = step.x1().max(x_cut);
    if lo >= hi {
        return 0.0;
    }
    rule.mapped(lo, hi)
        .map(|(x, w)| {
            let y = step.eval(x);
            let t = clock.t_of(x);
            w * clock.dt_dx(t) * f(t, y[IQ], y[IP])
        })
        .sum()
}

/// Painleve-III coordinates u = e^{-q}, x = t/2, canonical momenta and the
/// two polynomial Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiiiState {
    pub x: f64,
    pub u: f64,
    /// du/dx
    pub du: f64,
    pub v1: f64,
    pub v2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Map (t, q, p) of the sinh-Gordon orbit to Painleve-III variables.
pub fn piii_state(t: f64, q: f64, p: f64, nu: f64) -> Result<PiiiState> {
    let x = 0.5 * t;
    let u = (-q).exp();
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Overflow { t });
    }
    // du/dx = 2 du/dt = -2 q' u = 2 p u / t
    let du = 2.0 * p * u / t;
    let a1 = 2.0 * nu + 1.0;
    let a2 = 2.0 * nu - 1.0;
    let inv = 1.0 / (2.0 * u * u);
    let v1 = inv * (x * du + x * u * u - a1 * u - x);
    let v2 = inv * (x * du - x * u * u + a2 * u + x);
    let h1 = hamiltonian_h1(u, v1, x, nu);
    let h2 = hamiltonian_h2(u, v2, x, nu);
    let state = PiiiState {
        x,
        u,
        du,
        v1,
        v2,
        h1,
        h2,
    };
    if [v1, v2, h1, h2].iter().all(|v| v.is_finite()) {
        Ok(state)
    } else {
        Err(Error::Overflow { t })
    }
}

/// First polynomial Painleve-III Hamiltonian.
pub fn hamiltonian_h1(u: f64, v1: f64, x: f64, nu: f64) -> f64 {
    let a = 2.0 * nu + 1.0;
    (u * u * v1 * v1 - (x * u * u - a * u - x) * v1 - a * x * u) / x + a * a / (4.0 * x) + a
}

/// Second polynomial Painleve-III Hamiltonian.
pub fn hamiltonian_h2(u: f64, v2: f64, x: f64, nu: f64) -> f64 {
    let a = 2.0 * nu - 1.0;
    (u * u * v2 * v2 + (x * u * u - a * u - x) * v2 - a * x * u) / x + a * a / (4.0 * x) + a
}
