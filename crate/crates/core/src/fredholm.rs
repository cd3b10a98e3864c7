//! Nystrom evaluation of the Fredholm determinant of the operator
//! K_t(u, v) = e^{-(t/2) cosh u} tanh((u - v)/2) e^{-(t/2) cosh v} / (2 pi)
//! on L^2(R, du).
//!
//! K_t is antisymmetric, so det(1 - K_t) = det(1 + K_t) and
//! det(1 - K_t^2) = det(1 - K_t)^2. With tau_minus normalized as
//! exp[(1/2) int H] cosh(q/2), tau_minus(t, 1/pi) = det(1 - K_t^2)^{1/2}.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::solver::BmtwParams;
use crate::tau::{Branch, Route, TauValue};

pub const MIN_NODES: usize = 20;
/// Minimum of t cosh(trunc).
pub const TRUNCATION_DECAY: f64 = 40.0;

/// Default truncation of the u-interval: t cosh(trunc) = 50.
pub fn default_truncation(t: f64) -> f64 {
    (50.0 / t).max(2.0).acosh()
}

/// (det(1 - K), det(1 + K)) for the n-node discretization.
fn determinants(t: f64, n: usize, trunc: f64) -> Result<(f64, f64)> {
    let rule = GaussLegendre::new(n);
    let nodes: Vec<(f64, f64)> = rule.mapped(-trunc, trunc).collect();
    // e^{-(t/2) cosh u} sqrt(w) / sqrt(2 pi) at every node
    let side: Vec<f64> = nodes
        .iter()
        .map(|&(u, w)| (-0.5 * t * u.cosh()).exp() * (w / (2.0 * PI)).sqrt())
        .collect();
    let k = DMatrix::from_fn(n, n, |i, j| {
        side[i] * (0.5 * (nodes[i].0 - nodes[j].0)).tanh() * side[j]
    });
    let id = DMatrix::<f64>::identity(n, n);
    let minus = (&id - &k).lu().determinant();
    let plus = (&id + &k).lu().determinant();
    if !(minus.is_finite() && plus.is_finite()) {
        return Err(Error::Overflow { t });
    }
    Ok((minus, plus))
}

fn check_arguments(t: f64, n: usize, trunc: Option<f64>) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("t must be positive, got {t}")));
    }
    if n < MIN_NODES {
        return Err(Error::Config(format!(
            "need at least {MIN_NODES} nodes, got {n}"
        )));
    }
    let trunc = trunc.unwrap_or_else(|| default_truncation(t));
    if !(trunc > 0.0) || t * trunc.cosh() < TRUNCATION_DECAY {
        return Err(Error::Config(format!(
            "truncation {trunc} too short: need t cosh(trunc) >= {TRUNCATION_DECAY}"
        )));
    }
    Ok(trunc)
}

/// det(1 - K_t^2) = det(1 - K_t) det(1 + K_t).
pub fn det_one_minus_k_squared(t: f64, n: usize, trunc: Option<f64>) -> Result<f64> {
    let trunc = check_arguments(t, n, trunc)?;
    let (minus, plus) = determinants(t, n, trunc)?;
    Ok(minus * plus)
}

fn tau_from_determinants(t: f64, n: usize, trunc: f64) -> Result<f64> {
    let (minus, plus) = determinants(t, n, trunc)?;
    let product = minus * plus;
    if !(product > 0.0) {
        return Err(Error::Divergent {
            quantity: "det(1 - K^2)",
            detail: format!("non-positive value {product} at t = {t}, n = {n}"),
        });
    }
    Ok(product.sqrt())
}

/// tau_minus(t, 1/pi) = det(1 - K_t^2)^{1/2} with `n` Gauss-Legendre nodes on
/// [-trunc, trunc]; the error estimate compares against n/2 nodes.
pub fn fredholm_tau_minus(t: f64, n: usize, trunc: Option<f64>) -> Result<TauValue> {
    let trunc = check_arguments(t, n, trunc)?;
    let value = tau_from_determinants(t, n, trunc)?;
    let coarse = tau_from_determinants(t, n / 2, trunc)?;
    Ok(TauValue {
        t,
        params: BmtwParams {
            lambda_pi: 1.0,
            nu: 0.0,
        },
        branch: Branch::Minus,
        route: Route::Fredholm,
        value,
        est_error: (value - coarse).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_arguments() {
        assert!(fredholm_tau_minus(1.0, 10, None).is_err());
        assert!(fredholm_tau_minus(1.0, 40, Some(1.0)).is_err());
        assert!(fredholm_tau_minus(-1.0, 40, None).is_err());
    }

    #[test]
    fn large_t_limit() {
        let v = fredholm_tau_minus(8.0, 60, None).unwrap();
        assert!((v.value - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn antisymmetric_determinants_agree() {
        let (minus, plus) = determinants(0.7, 40, default_truncation(0.7)).unwrap();
        assert!((minus - plus).abs() < 1e-13);
        let sq = det_one_minus_k_squared(0.7, 40, None).unwrap();
        let tau = fredholm_tau_minus(0.7, 40, None).unwrap().value;
        assert!((sq - tau * tau).abs() < 1e-13);
    }
}
