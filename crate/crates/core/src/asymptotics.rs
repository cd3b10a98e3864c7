//! Closed-form constants and asymptotic predictors for the BMTW family.

use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quadrature::adaptive_gauss_legendre;
use crate::solver::BmtwParams;
use crate::specfn::{digamma, ln_barnes_g, ln_gamma, EULER_GAMMA, SQRT_PI, ZETA_PRIME_MINUS_ONE};
use crate::tau::Branch;

/// sigma = (2/pi) arcsin(lambda pi).
pub fn sigma_of_lambda(lambda_pi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda_pi) {
        return Err(domain(
            "sigma_of_lambda",
            format!("lambda_pi = {lambda_pi}"),
        ));
    }
    Ok(FRAC_2_PI * lambda_pi.asin())
}

/// Inverse of [`sigma_of_lambda`]: returns lambda pi.
pub fn lambda_pi_of_sigma(sigma: f64) -> f64 {
    (0.5 * PI * sigma).sin()
}

/// Gamma function for x > -1, x != 0.
fn gamma_shifted(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(ln_gamma(x)?.exp())
    } else if x > -1.0 && x != 0.0 {
        Ok(ln_gamma(x + 1.0)?.exp() / x)
    } else {
        Err(domain("gamma", format!("x = {x}")))
    }
}

/// B(sigma, nu) = 2^{-3 sigma} [G((1-s)/2) / G((1+s)/2)]^2 G(nu + (1+s)/2) / G(nu + (1-s)/2).
pub fn b_coeff(sigma: f64, nu: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&sigma) {
        if sigma >= 1.0 {
            return Err(Error::Divergent {
                quantity: "B",
                detail: format!(
                    "B(sigma, nu) diverges at sigma = {sigma}; use the lambda pi = 1 predictor"
                ),
            });
        }
        return Err(domain("b_coeff", format!("sigma = {sigma}")));
    }
    if nu <= -0.5 {
        return Err(domain("b_coeff", format!("nu = {nu}")));
    }
    let lo = 0.5 * (1.0 - sigma);
    let hi = 0.5 * (1.0 + sigma);
    let ratio = 2.0 * (ln_gamma(lo)? - ln_gamma(hi)?);
    let nu_ratio = gamma_shifted(nu + hi)? / gamma_shifted(nu + lo)?;
    Ok((-3.0 * sigma * LN_2 + ratio).exp() * nu_ratio)
}

/// The nu = 0 coefficient 2^{-3 sigma} Gamma((1-sigma)/2) / Gamma((1+sigma)/2).
pub fn b_coeff_ising(sigma: f64) -> Result<f64> {
    if sigma >= 1.0 {
        return b_coeff(sigma, 0.0);
    }
    if sigma < 0.0 {
        return Err(domain("b_coeff_ising", format!("sigma = {sigma}")));
    }
    let v = -3.0 * sigma * LN_2 + ln_gamma(0.5 * (1.0 - sigma))? - ln_gamma(0.5 * (1.0 + sigma))?;
    Ok(v.exp())
}

/// Short-distance constant A(lambda).
pub fn a_of_lambda(lambda_pi: f64) -> Result<f64> {
    if !(lambda_pi > 0.0 && lambda_pi <= 1.0) {
        return Err(domain("a_of_lambda", format!("lambda_pi = {lambda_pi}")));
    }
    let s = 0.5 * (1.0 - sigma_of_lambda(lambda_pi)?);
    let num = 3.0 * ZETA_PRIME_MINUS_ONE - (3.0 * s * s + 1.0 / 6.0) * LN_2;
    let den = ln_barnes_g(1.0 + s)? + ln_barnes_g(1.0 - s)?;
    Ok((num - den).exp())
}

/// 3 ln 2 - 2 gamma_E - digamma(1 + nu), so that C(nu) = 1 + 2 nu k(nu).
fn c_slope(nu: f64) -> Result<f64> {
    Ok(3.0 * LN_2 - 2.0 * EULER_GAMMA - digamma(1.0 + nu)?)
}

/// C(nu) = 1 + 2 nu (3 ln 2 - 2 gamma_E - digamma(1 + nu)).
pub fn c_of_nu(nu: f64) -> Result<f64> {
    if nu <= -0.5 {
        return Err(domain("c_of_nu", format!("nu = {nu}")));
    }
    Ok(1.0 + 2.0 * nu * c_slope(nu)?)
}

/// Wu's constant exp(3 zeta'(-1) + ln 2 / 12).
pub fn wu_constant() -> f64 {
    (3.0 * ZETA_PRIME_MINUS_ONE + LN_2 / 12.0).exp()
}

/// |2^{1/4} A(1/pi) - exp(3 zeta'(-1) + ln 2 / 12)|.
pub fn wu_identity_residual() -> Result<f64> {
    Ok((2f64.powf(0.25) * a_of_lambda(1.0)? - wu_constant()).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    pub lambda_pi: f64,
    pub nu: f64,
    pub sigma: f64,
    pub s: f64,
    /// `None` where B diverges (sigma = 1).
    #[serde(rename = "B")]
    pub b: Option<f64>,
    /// `None` at lambda pi = 0, where A is not defined.
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
}

impl AsymptoticConstants {
    pub fn new(params: &BmtwParams) -> Result<Self> {
        params.validate()?;
        let sigma = sigma_of_lambda(params.lambda_pi)?;
        let b = if sigma < 1.0 {
            Some(b_coeff(sigma, params.nu)?)
        } else {
            None
        };
        let a = if params.lambda_pi > 0.0 {
            Some(a_of_lambda(params.lambda_pi)?)
        } else {
            None
        };
        Ok(Self {
            lambda_pi: params.lambda_pi,
            nu: params.nu,
            sigma,
            s: 0.5 * (1.0 - sigma),
            b,
            a,
            c: c_of_nu(params.nu)?,
        })
    }
}

/// Leading small-t behaviour of psi(t, lambda, nu).
pub fn psi_small_t(t: f64, params: &BmtwParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("psi_small_t", format!("t = {t}")));
    }
    params.validate()?;
    let nu = params.nu;
    let lt = t.ln();
    if params.lambda_pi < 1.0 {
        let sigma = sigma_of_lambda(params.lambda_pi)?;
        let b = b_coeff(sigma, nu)?;
        let corr = 1.0 - (nu / b) * (1.0 - sigma).powi(-2) * t.powf(1.0 - sigma)
            + b * nu * (1.0 + sigma).powi(-2) * t.powf(1.0 + sigma);
        if corr <= 0.0 {
            return Err(domain(
                "psi_small_t",
                format!("t = {t} outside the expansion"),
            ));
        }
        return Ok(-sigma * lt - b.ln() - corr.ln());
    }
    let bracket = if nu == 0.0 {
        -lt + 3.0 * LN_2 - EULER_GAMMA
    } else {
        // (C^2 - 1) / (4 nu) with C = 1 + 2 nu k
        let k = c_slope(nu)?;
        let c = 1.0 + 2.0 * nu * k;
        nu * lt * lt - c * lt + k * (1.0 + nu * k)
    };
    if bracket <= 0.0 {
        return Err(domain(
            "psi_small_t",
            format!("t = {t} outside the expansion"),
        ));
    }
    Ok(-(0.5 * t * bracket).ln())
}

/// The nu = 0, lambda pi = 1 law -ln t - ln(-(ln(t/8) + gamma_E)/2).
pub fn psi_small_t_critical(t: f64) -> f64 {
    -t.ln() - (-0.5 * ((t / 8.0).ln() + EULER_GAMMA)).ln()
}

/// Leading small-t behaviour A(lambda) t^{sigma (sigma - 2) / 4}, shared by
/// both branches. Only the nu = 0 constant is known.
pub fn tau_small_t(t: f64, params: &BmtwParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("tau_small_t", format!("t = {t}")));
    }
    params.validate()?;
    if params.nu != 0.0 {
        return Err(domain(
            "tau_small_t",
            format!("A(lambda, nu) is not known for nu = {}", params.nu),
        ));
    }
    let sigma = sigma_of_lambda(params.lambda_pi)?;
    Ok(a_of_lambda(params.lambda_pi)? * t.powf(sigma * (sigma - 2.0) / 4.0))
}

/// Leading large-t behaviour of tau_plus / tau_minus.
pub fn tau_large_t(t: f64, params: &BmtwParams, branch: Branch) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("tau_large_t", format!("t = {t}")));
    }
    params.validate()?;
    let lambda = params.lambda();
    let nu = params.nu;
    let g = gamma_shifted(nu + 0.5)?;
    Ok(match branch {
        Branch::Plus => lambda * g * (2.0 * t).powf(-nu - 0.5) * (-t).exp(),
        Branch::Minus => 1.0 + tau_large_t_minus_excess(t, params)?,
    })
}

/// tau_minus - 1 of the large-t display, without rounding against 1.
pub fn tau_large_t_minus_excess(t: f64, params: &BmtwParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("tau_large_t_minus_excess", format!("t = {t}")));
    }
    params.validate()?;
    let lambda = params.lambda();
    let nu = params.nu;
    if nu == 0.0 {
        return Ok(PI * lambda * lambda / (8.0 * t * t) * (-2.0 * t).exp());
    }
    let g = gamma_shifted(nu + 0.5)?;
    Ok(-0.5 * lambda * lambda * nu * g * g * (2.0 * t).powf(-2.0 * nu - 1.0) * (-2.0 * t).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefactorEstimate {
    /// Estimate at the smallest sample t.
    pub a_est: f64,
    /// Per-decade contraction of successive estimate differences.
    pub decay_ratio: f64,
    /// (t, A_est(t)) in decreasing t.
    pub estimates: Vec<(f64, f64)>,
}

/// A_est(t) = tau t^{-sigma (sigma - 2) / 4} over the samples.
pub fn extract_prefactor(samples: &[(f64, f64)], sigma: f64) -> Result<PrefactorEstimate> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let mut sorted: Vec<(f64, f64)> = samples.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sorted.iter().any(|&(t, v)| !(t > 0.0) || !v.is_finite()) {
        return Err(domain(
            "extract_prefactor",
            "samples need t > 0 and finite tau",
        ));
    }
    let expo = -sigma * (sigma - 2.0) / 4.0;
    let estimates: Vec<(f64, f64)> = sorted.iter().map(|&(t, v)| (t, v * t.powf(expo))).collect();
    let n = estimates.len();
    let d_last = (estimates[n - 1].1 - estimates[n - 2].1).abs();
    let d_prev = (estimates[n - 2].1 - estimates[n - 3].1).abs();
    let decades = (estimates[n - 2].0 / estimates[n - 1].0).log10();
    if !(d_prev > 0.0 && decades > 0.0) {
        return Err(domain("extract_prefactor", "degenerate samples"));
    }
    Ok(PrefactorEstimate {
        a_est: estimates[n - 1].1,
        decay_ratio: (d_last / d_prev).powf(1.0 / decades),
        estimates,
    })
}

/// d ln B / d sigma at nu = 0.
fn dlnb_dsigma(sigma: f64) -> Result<f64> {
    Ok(-3.0 * LN_2 - 0.5 * digamma(0.5 * (1.0 - sigma))? - 0.5 * digamma(0.5 * (1.0 + sigma))?)
}

/// Closed form of L(lambda) = (1/2) int_0^lambda sigma d ln B.
pub fn l_closed_form(lambda_pi: f64) -> Result<f64> {
    let sigma = sigma_of_lambda(lambda_pi)?;
    let s = 0.5 * (1.0 - sigma);
    let first = -0.75 * sigma * sigma * LN_2;
    let second = -0.5 * s.ln() - 0.5 * sigma - 0.5 * LN_2;
    let third = 0.5 * s.ln()
        + 0.5 * (ln_gamma(0.5 * (1.0 - sigma))? - ln_gamma(0.5 * (1.0 + sigma))?)
        - s * s
        - (ln_barnes_g(1.0 + s)? + ln_barnes_g(1.0 - s)?)
        + 0.25
        + 7.0 / 12.0 * LN_2
        + 3.0 * ZETA_PRIME_MINUS_ONE;
    Ok(first + second + third)
}

/// L(lambda) by quadrature in sigma' (lambda' = sin(pi sigma'/2)/pi).
pub fn l_quadrature(lambda_pi: f64) -> Result<f64> {
    let sigma = sigma_of_lambda(lambda_pi)?;
    dlnb_dsigma(sigma)?;
    let f = |x: f64| x * dlnb_dsigma(x).unwrap_or(f64::NAN);
    let (v, _) = adaptive_gauss_legendre(&f, 0.0, sigma, 1e-14);
    if !v.is_finite() {
        return Err(domain("l_quadrature", format!("lambda_pi = {lambda_pi}")));
    }
    Ok(0.5 * v)
}

/// |L by quadrature - L closed form| for lambda pi in (0, 1).
pub fn l_decomposition_residual(lambda_pi: f64) -> Result<f64> {
    if !(lambda_pi > 0.0 && lambda_pi < 1.0) {
        return Err(domain(
            "l_decomposition_residual",
            format!("lambda_pi = {lambda_pi}"),
        ));
    }
    Ok((l_quadrature(lambda_pi)? - l_closed_form(lambda_pi)?).abs())
}

/// A(lambda) as lambda pi -> 0+, reached through G(3/2) G(1/2) = sqrt(pi) G(1/2)^2.
pub fn a_limit_at_zero() -> Result<f64> {
    let num = 3.0 * ZETA_PRIME_MINUS_ONE - (0.75 + 1.0 / 6.0) * LN_2;
    Ok((num - SQRT_PI.ln() - 2.0 * ln_barnes_g(0.5)?).exp())
}
