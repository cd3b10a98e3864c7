//! Quadrature rules shared by the special-function kernel, the orbit
//! solver (analytic tails, lambda-integrals) and the Nystrom discretization.

use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss-Legendre rule on a reference interval.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on [-1, 1], nodes ascending.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1e-3) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Adaptive bisection driven by a 10-point Gauss-Legendre rule.
///
/// Returns the integral and the accumulated |coarse - fine| estimate.
pub fn adaptive_gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let rule = GaussLegendre::new(10);
    let whole = rule.integrate(a, b, f);
    adapt(f, &rule, a, b, whole, tol, 0)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, f);
    let right = rule.integrate(mid, b, f);
    let refined = left + right;
    let delta = (refined - whole).abs();
    if delta <= tol || depth >= 40 {
        return (refined, delta);
    }
    let (l, el) = adapt(f, rule, a, mid, left, 0.5 * tol, depth + 1);
    let (r, er) = adapt(f, rule, mid, b, right, 0.5 * tol, depth + 1);
    (l + r, el + er)
}

/// Tanh-sinh (double exponential) quadrature on [a, b].
///
/// The integrand receives `(x, x - a, b - x)`; the two distances are computed
/// without cancellation so that algebraic endpoint singularities can be
/// evaluated accurately. Returns the value and the last level-to-level change.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    let len = b - a;
    let eval = |tau: f64| -> f64 {
        let u = FRAC_PI_2 * tau.sinh();
        let e = (-2.0 * u.abs()).exp();
        // sech^2(u) = 4e / (1 + e)^2
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        let w = 0.5 * len * FRAC_PI_2 * tau.cosh() * sech2;
        if w == 0.0 {
            return 0.0;
        }
        // distance to the nearer endpoint is len * e / (1 + e)
        let near = len * e / (1.0 + e);
        let far = len - near;
        let (da, db) = if u < 0.0 { (near, far) } else { (far, near) };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        w * f(a + da, da, db)
    };

    const TAU_MAX: f64 = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let tau = k as f64 * h;
        if tau > TAU_MAX {
            break;
        }
        sum += eval(tau) + eval(-tau);
        k += 1;
    }
    let mut estimate = h * sum;
    let mut change = f64::INFINITY;
    for _level in 0..10 {
        h *= 0.5;
        let mut k = 1;
        loop {
            let tau = k as f64 * h;
            if tau > TAU_MAX {
                break;
            }
            sum += eval(tau) + eval(-tau);
            k += 2;
        }
        let next = h * sum;
        change = (next - estimate).abs();
        estimate = next;
        if change <= rel_tol * estimate.abs() {
            break;
        }
    }
    (estimate, change)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 33] {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-13, "n={n}");
            let got = rule.integrate(0.0, 1.0, |x| x.powi(2 * n as i32 - 2));
            assert!((got - 1.0 / (2.0 * n as f64 - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn large_rule_is_accurate() {
        let rule = GaussLegendre::new(400);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        let got = rule.integrate(0.0, PI, f64::sin);
        assert!((got - 2.0).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // int_0^1 x^{-1/2} dx = 2
        let (v, _) = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        // int_0^1 ln x dx = -1
        let (v, _) = tanh_sinh(|_, da, _| da.ln(), 0.0, 1.0, 1e-14);
        assert!((v + 1.0).abs() < 1e-12, "{v}");
        let (v, _) = tanh_sinh(|x, _, _| x.exp(), 1.0, 3.0, 1e-14);
        assert!((v - (3f64.exp() - 1f64.exp())).abs() < 1e-12);
    }

    #[test]
    fn adaptive_rule_converges() {
        let (v, err) = adaptive_gauss_legendre(&|x: f64| (1.0 + x * x).recip(), 0.0, 10.0, 1e-13);
        assert!((v - 10f64.atan()).abs() < 1e-12);
        assert!(err < 1e-12);
    }
}
