//! Real special-function kernel: modified Bessel K0/K1, log-gamma, digamma,
//! log Barnes-G, the boundary-condition integral of the nu-family, and the
//! fundamental constants they rest on.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::quadrature::{adaptive_gauss_legendre, tanh_sinh};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_431;
/// Derivative of the Riemann zeta function at -1.
#[allow(clippy::excessive_precision)]
pub const ZETA_PRIME_MINUS_ONE: f64 = -0.165_421_143_700_450_929_213_919_660_242_780_64;
pub const LN_PI: f64 = 1.144_729_885_849_400_174_143_427_351_353_058_71;
pub const SQRT_PI: f64 = 1.772_453_850_905_516_027_298_167_483_341_145_18;
const LN_2PI: f64 = 1.837_877_066_409_345_483_560_659_472_811_235_28;

/// Fundamental constants, carried both as doubles and as 36-digit decimal
/// strings (the strings are what the constants report exports).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalConstants {
    pub euler_gamma: f64,
    pub zeta_prime_minus_one: f64,
    pub ln_two: f64,
    pub ln_pi: f64,
    pub sqrt_pi: f64,
}

impl FundamentalConstants {
    pub const DECIMAL: [(&'static str, &'static str); 5] = [
        ("euler_gamma", "0.577215664901532860606512090082402431"),
        (
            "zeta_prime_minus_one",
            "-0.165421143700450929213919660242780643",
        ),
        ("ln_two", "0.693147180559945309417232121458176568"),
        ("ln_pi", "1.14472988584940017414342735135305871"),
        ("sqrt_pi", "1.77245385090551602729816748334114518"),
    ];

    pub const fn get() -> Self {
        Self {
            euler_gamma: EULER_GAMMA,
            zeta_prime_minus_one: ZETA_PRIME_MINUS_ONE,
            ln_two: LN_2,
            ln_pi: LN_PI,
            sqrt_pi: SQRT_PI,
        }
    }
}

// B_{2k} / (2k (2k-1)), k = 1..8, for the Stirling series of ln Gamma.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2k} / (2k), k = 1..8, for the asymptotic series of digamma.
const DIGAMMA_ASYMP: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

// B_{2j} / (2j)!, j = 1..8.
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

const ZETA_TERMS: usize = 64;

/// zeta(k) - 1 for k = 0..ZETA_TERMS (entries 0 and 1 unused).
fn zeta_minus_one_table() -> &'static [f64; ZETA_TERMS] {
    static TABLE: OnceLock<[f64; ZETA_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0; ZETA_TERMS];
        for (k, slot) in table.iter_mut().enumerate().skip(2) {
            *slot = zeta_minus_one(k as f64);
        }
        table
    })
}

/// Euler-Maclaurin evaluation of zeta(s) - 1 for real s >= 2.
fn zeta_minus_one(s: f64) -> f64 {
    const N: f64 = 10.0;
    let mut sum = 0.0;
    for n in (2..10).rev() {
        sum += (n as f64).powf(-s);
    }
    let n_pow = N.powf(-s);
    sum += N * n_pow / (s - 1.0) + 0.5 * n_pow;
    // rising factorial s (s+1) ... (s+2j-2) times N^{-s-2j+1}
    let mut rising = s;
    let mut power = n_pow / N;
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if j > 0 {
            let jf = j as f64;
            rising *= (s + 2.0 * jf - 1.0) * (s + 2.0 * jf);
            power /= N * N;
        }
        sum += coeff * rising * power;
    }
    sum
}

/// ln Gamma(1 + z) for |z| <= 1/2 via the zeta series.
fn ln_gamma_1p_series(z: f64) -> f64 {
    // ln Gamma(1+z) = -ln(1+z) + z(1-gamma) + sum_{k>=2} (zeta(k)-1) (-z)^k / k
    let table = zeta_minus_one_table();
    let mut sum = 0.0;
    let mut zk = -z;
    for (k, zm1) in table.iter().enumerate().skip(2) {
        zk *= -z;
        let term = zm1 * zk / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 6 {
            break;
        }
    }
    -z.ln_1p() + z * (1.0 - EULER_GAMMA) + sum
}

fn check_positive(func: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(
            func,
            format!("argument must be finite and positive, got {x}"),
        ))
    }
}

/// Natural logarithm of Gamma(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("ln_gamma", x)?;
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if (0.5..=1.5).contains(&x) {
        return ln_gamma_1p_series(x - 1.0);
    }
    if x > 1.5 && x < 2.5 {
        let z = x - 2.0;
        return z.ln_1p() + ln_gamma_1p_series(z);
    }
    let mut shift = 0.0;
    let mut z = x;
    let mut prod = 1.0;
    while z < 10.0 {
        prod *= z;
        z += 1.0;
        if !(1e-280..=1e280).contains(&prod) {
            shift += prod.ln();
            prod = 1.0;
        }
    }
    shift += prod.ln();
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * LN_2PI + series - shift
}

/// Digamma psi(x) = d/dx ln Gamma(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    let mut acc = 0.0;
    let mut z = x;
    while z < 10.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in DIGAMMA_ASYMP {
        series += c * pow;
        pow *= inv2;
    }
    Ok(acc + z.ln() - 0.5 / z - series)
}

/// ln G(1 + z) for |z| <= 1/2.
fn ln_barnes_g_1p_series(z: f64) -> f64 {
    let table = zeta_minus_one_table();
    // sum_{k>=2} (-1)^k zeta(k) z^{k+1}/(k+1) split into the zeta(k)=1 part,
    // which sums to ln(1+z) - z + z^2/2, and the fast (zeta(k)-1) remainder.
    let mut rest = 0.0;
    let mut zk1 = z * z;
    for (k, zm1) in table.iter().enumerate().skip(2) {
        zk1 *= -z;
        // zk1 = (-1)^{k+1} z^{k+1}
        let term = -zm1 * zk1 / (k as f64 + 1.0);
        rest += term;
        if term.abs() < 1e-18 * rest.abs().max(1e-300) && k > 6 {
            break;
        }
    }
    0.5 * z * LN_2PI - 0.5 * (z + (1.0 + EULER_GAMMA) * z * z)
        + (z.ln_1p() - z + 0.5 * z * z)
        + rest
}

/// ln G(x) for x in (0, 3), G the Barnes double-gamma function.
pub fn ln_barnes_g(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 3.0) {
        return Err(domain(
            "ln_barnes_g",
            format!("argument must lie in (0, 3), got {x}"),
        ));
    }
    Ok(ln_barnes_g_unchecked(x))
}

fn ln_barnes_g_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if (0.5..=1.5).contains(&x) {
        ln_barnes_g_1p_series(x - 1.0)
    } else if x < 0.5 {
        // G(x) = G(1 + x) / Gamma(x)
        ln_barnes_g_1p_series(x) - ln_gamma_unchecked(x)
    } else {
        // G(x) = Gamma(x - 1) G(x - 1)
        ln_gamma_unchecked(x - 1.0) + ln_barnes_g_unchecked(x - 1.0)
    }
}

/// |int_0^z ln Gamma(1+x) dx - [(z/2)ln(2 pi) - z(z+1)/2 + z ln Gamma(1+z) - ln G(1+z)]|
/// with the integral computed by adaptive Gauss-Legendre quadrature.
pub fn barnes_integral_residual(z: f64) -> Result<f64> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(domain(
            "barnes_integral_residual",
            format!("z must lie in (0, 1], got {z}"),
        ));
    }
    let f = |x: f64| ln_gamma_unchecked(1.0 + x);
    let (integral, _) = adaptive_gauss_legendre(&f, 0.0, z, 1e-16);
    let closed = 0.5 * z * LN_2PI - 0.5 * z * (z + 1.0) + z * ln_gamma_unchecked(1.0 + z)
        - ln_barnes_g_unchecked(1.0 + z);
    Ok((integral - closed).abs())
}

/// Modified Bessel function of the second kind, K0 or K1.
pub fn bessel_k(order: u32, t: f64) -> Result<f64> {
    let (k0, k1) = bessel_k01_scaled(t).map_err(|_| {
        domain(
            "bessel_k",
            format!("argument must be finite and positive, got {t}"),
        )
    })?;
    let scale = (-t).exp();
    match order {
        0 => Ok(k0 * scale),
        1 => Ok(k1 * scale),
        _ => Err(domain(
            "bessel_k",
            format!("order must be 0 or 1, got {order}"),
        )),
    }
}

/// (e^t K0(t), e^t K1(t)).
pub fn bessel_k01_scaled(t: f64) -> Result<(f64, f64)> {
    check_positive("bessel_k", t)?;
    if t <= 2.0 {
        let (k0, k1) = bessel_k01_series(t);
        let e = t.exp();
        Ok((k0 * e, k1 * e))
    } else {
        Ok(bessel_k01_cf2_scaled(t))
    }
}

fn bessel_k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    // K0 = -(ln(x/2)+gamma) I0 + sum_{k>=1} H_k y^k / (k!)^2
    // K1 = 1/x + ln(x/2) I1 - (x/4) sum_k [psi(k+1)+psi(k+2)] y^k / (k!(k+1)!)
    let mut i0 = 1.0;
    let mut k0_sum = 0.0;
    let mut term0 = 1.0; // y^k / (k!)^2
    let mut i1_sum = 1.0;
    let mut term1 = 1.0; // y^k / (k!(k+1)!)
    let mut harmonic = 0.0;
    let mut psi_sum = (-EULER_GAMMA) + (1.0 - EULER_GAMMA);
    let mut k1_sum = psi_sum;
    for k in 1..60 {
        let kf = k as f64;
        harmonic += 1.0 / kf;
        term0 *= y / (kf * kf);
        term1 *= y / (kf * (kf + 1.0));
        i0 += term0;
        k0_sum += harmonic * term0;
        i1_sum += term1;
        // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
        psi_sum = 2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA;
        k1_sum += psi_sum * term1;
        if term0 < 1e-18 * i0 {
            break;
        }
    }
    let k0 = -log_term * i0 + k0_sum;
    let i1 = 0.5 * x * i1_sum;
    let k1 = 1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * k1_sum;
    (k0, k1)
}

/// Steed's continued fraction (Temme's CF2) for order 0, scaled by e^x.
fn bessel_k01_cf2_scaled(x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-17;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Exponent cut-off for the cosh-substituted boundary integrals.
const BC_EXPONENT_CUTOFF: f64 = 60.0;

/// I(t, nu) = int_1^inf e^{-ty} (y^2-1)^{-1/2} ((y-1)/(y+1))^nu dy and,
/// optionally, dI/dt.
///
/// Evaluated as int_0^inf e^{-t cosh th} tanh^{2 nu}(th/2) dth by tanh-sinh
/// quadrature, which absorbs the th^{2 nu} endpoint behaviour.
pub fn bc_integral(t: f64, nu: f64, with_derivative: bool) -> Result<(f64, Option<f64>)> {
    let (value, deriv) = bc_integral_scaled(t, nu, with_derivative)?;
    let scale = (-t).exp();
    Ok((value * scale, deriv.map(|d| d * scale)))
}

/// Same as [`bc_integral`] with both outputs multiplied by e^t.
pub fn bc_integral_scaled(t: f64, nu: f64, with_derivative: bool) -> Result<(f64, Option<f64>)> {
    check_positive("bc_integral", t)?;
    if !(nu > -0.5) || !nu.is_finite() {
        return Err(domain(
            "bc_integral",
            format!("nu must exceed -1/2, got {nu}"),
        ));
    }
    // e^{-t (cosh th - 1)} <= e^{-cutoff} beyond th_max
    let th_max = (1.0 + BC_EXPONENT_CUTOFF / t).acosh();
    let weight = move |th: f64| -> f64 {
        let decay = (-t * cosh_minus_one(th)).exp();
        if nu == 0.0 {
            decay
        } else {
            decay * (0.5 * th).tanh().powf(2.0 * nu)
        }
    };
    let (value, _) = tanh_sinh(|_, th, _| weight(th), 0.0, th_max, 1e-15);
    let deriv = if with_derivative {
        let (d, _) = tanh_sinh(|_, th, _| -th.cosh() * weight(th), 0.0, th_max, 1e-15);
        Some(d)
    } else {
        None
    };
    Ok((value, deriv))
}

fn cosh_minus_one(x: f64) -> f64 {
    let s = (0.5 * x).sinh();
    2.0 * s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zeta_values() {
        let t = zeta_minus_one_table();
        assert!((t[2] + 1.0 - PI * PI / 6.0).abs() < 1e-15);
        assert!((t[4] + 1.0 - PI.powi(4) / 90.0).abs() < 1e-15);
        assert!((t[3] - 0.202_056_903_159_594_285_4).abs() < 1e-15);
        assert!(t[60] > 0.0 && t[60] < 1e-17);
    }

    #[test]
    fn ln_gamma_special_values() {
        assert!((ln_gamma(0.5).unwrap() - 0.5 * LN_PI).abs() < 1e-15);
        assert!((ln_gamma(0.5).unwrap().exp() - SQRT_PI).abs() < 1e-14);
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-16);
        assert!(rel(ln_gamma(10.0).unwrap(), 362_880f64.ln()) < 1e-15);
        assert!(rel(ln_gamma(3.0).unwrap(), LN_2) < 1e-14);
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
    }

    #[test]
    fn gamma_recurrence_on_grid() {
        for i in 1..10 {
            let z = i as f64 / 10.0;
            let lhs = ln_gamma(1.0 + z).unwrap().exp();
            let rhs = z * ln_gamma(z).unwrap().exp();
            assert!((lhs - rhs).abs() < 1e-12, "z={z}");
        }
        // across the branch boundaries of the implementation
        for x in [
            0.49, 0.5, 0.51, 1.49, 1.5, 1.51, 2.49, 2.5, 2.51, 9.99, 10.0,
        ] {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = x.ln() + ln_gamma(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-14 * (1.0 + lhs.abs()), "x={x}");
        }
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        let expect = 2.0 - EULER_GAMMA - 2.0 * LN_2;
        assert!((digamma(1.5).unwrap() - expect).abs() < 1e-14);
        let x = 2.7;
        let h = 1e-5;
        let fd = (ln_gamma(x + h).unwrap() - ln_gamma(x - h).unwrap()) / (2.0 * h);
        assert!((fd - digamma(x).unwrap()).abs() < 1e-7);
        assert!(digamma(0.0).is_err());
    }

    #[test]
    fn barnes_g_values() {
        assert_eq!(ln_barnes_g(1.0).unwrap(), 0.0);
        assert_eq!(ln_barnes_g(2.0).unwrap(), 0.0);
        let special = 0.5 * (3.0 * ZETA_PRIME_MINUS_ONE - 0.5 * LN_PI + LN_2 / 12.0);
        assert!((ln_barnes_g(0.5).unwrap() - special).abs() < 1e-14);
        let shifted = ln_barnes_g(0.5).unwrap() + ln_gamma(0.5).unwrap();
        assert!((ln_barnes_g(1.5).unwrap() - shifted).abs() < 1e-14);
        assert!(ln_barnes_g(0.0).is_err());
        assert!(ln_barnes_g(3.0).is_err());
        // G(3) = Gamma(2) G(2) = 1
        assert!(ln_barnes_g(2.999_999_999).unwrap().abs() < 1e-8);
    }

    #[test]
    fn barnes_functional_equation_on_grid() {
        for i in 1..10 {
            let z = i as f64 / 10.0;
            let lhs = ln_barnes_g(1.0 + z).unwrap();
            let rhs = ln_gamma(z).unwrap() + ln_barnes_g(z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn barnes_integral_identity() {
        for z in [0.25, 0.5, 1.0] {
            let r = barnes_integral_residual(z).unwrap();
            assert!(r <= 1e-10, "z={z} r={r}");
        }
        assert!(barnes_integral_residual(1e-8).unwrap() <= 1e-12);
        assert!(barnes_integral_residual(0.0).is_err());
        assert!(barnes_integral_residual(1.5).is_err());
    }

    #[test]
    fn bessel_branches_meet_at_two() {
        for x in [1.999_999, 2.0, 2.000_001] {
            let (s0, s1) = bessel_k01_series(x);
            let (c0, c1) = bessel_k01_cf2_scaled(x);
            let e = (-x).exp();
            assert!(rel(s0, c0 * e) < 1e-13, "x={x}");
            assert!(rel(s1, c1 * e) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn bessel_asymptotics_and_derivative() {
        let t = 30.0;
        let lead = (PI / (2.0 * t)).sqrt() * (-t).exp();
        assert!((bessel_k(0, t).unwrap() / lead - 1.0).abs() < 1e-2);
        let t = 2.0;
        let h = 1e-3;
        let k = |x| bessel_k(0, x).unwrap();
        let fd = (-k(t + 2.0 * h) + 8.0 * k(t + h) - 8.0 * k(t - h) + k(t - 2.0 * h)) / (12.0 * h);
        assert!((bessel_k(1, t).unwrap() + fd).abs() < 1e-8);
        assert_eq!(bessel_k(0, 800.0).unwrap(), 0.0);
        assert!(bessel_k(0, 0.0).is_err());
        assert!(bessel_k(2, 1.0).is_err());
    }

    #[test]
    fn bc_integral_reduces_to_k0() {
        for t in [0.5, 2.0, 10.0] {
            let (v, d) = bc_integral(t, 0.0, true).unwrap();
            assert!(rel(v, bessel_k(0, t).unwrap()) < 1e-10, "t={t}");
            assert!(rel(d.unwrap(), -bessel_k(1, t).unwrap()) < 1e-10, "t={t}");
        }
        assert!(bc_integral(1.0, -0.5, false).is_err());
        assert!(bc_integral(-1.0, 0.0, false).is_err());
    }

    #[test]
    fn bc_integral_large_t_law() {
        let ratio = |t: f64, nu: f64| {
            let (v, _) = bc_integral_scaled(t, nu, false).unwrap();
            let lead = (ln_gamma(nu + 0.5).unwrap() - (nu + 0.5) * (2.0 * t).ln()).exp();
            v / lead
        };
        for nu in [0.0, 0.25] {
            assert!((ratio(40.0, nu) - 1.0).abs() < 1e-2, "nu={nu}");
        }
        // O(1/t) approach for larger nu
        for nu in [0.5, 1.0, 3.0] {
            let e40 = (ratio(40.0, nu) - 1.0).abs();
            let e80 = (ratio(80.0, nu) - 1.0).abs();
            assert!(e80 < 0.6 * e40, "nu={nu}");
        }
    }

    #[test]
    fn bc_integral_negative_nu() {
        // nu in (-1/2, 0): integrable th^{2 nu} singularity at the origin
        let (v, _) = bc_integral(1.0, -0.4, false).unwrap();
        let (v2, _) = bc_integral(1.0, -0.3, false).unwrap();
        assert!(v.is_finite() && v > v2 && v2 > bessel_k(0, 1.0).unwrap());
    }
}
