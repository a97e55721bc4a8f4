//! One-dimensional quadrature: Gauss–Legendre rules, adaptive refinement and
//! integrable power-law endpoint singularities.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed Gauss–Legendre rule mapped to an interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let (nodes, weights) = gauss_legendre(points);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// [`Self::integrate_adaptive`] with a tolerance relative to a first estimate.
    pub fn integrate_adaptive_rel<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, rel: f64) -> f64 {
        let whole = self.integrate(&mut f, a, b);
        self.refine(&mut f, a, b, whole, rel * whole.abs(), 40)
    }

    /// Adaptive bisection: a panel is accepted once it agrees with the sum over
    /// its two halves to `tol` (absolute, scaled by the panel's share of `[a, b]`).
    pub fn integrate_adaptive<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, tol: f64) -> f64 {
        let whole = self.integrate(&mut f, a, b);
        self.refine(&mut f, a, b, whole, tol, 40)
    }

    fn refine<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let mid = 0.5 * (a + b);
        let left = self.integrate(&mut *f, a, mid);
        let right = self.integrate(&mut *f, mid, b);
        let sum = left + right;
        if depth == 0 || (sum - whole).abs() <= tol.max(1e-15 * sum.abs()) {
            return sum;
        }
        self.refine(f, a, mid, left, 0.5 * tol, depth - 1) + self.refine(f, mid, b, right, 0.5 * tol, depth - 1)
    }
}

/// `∫₀^len f(u) du` for an integrand that may behave like `u^{-p}` (`p < 1`) at `u = 0`.
///
/// The substitution `u = len·w^{1/(1-p)}` turns the singular factor into a bounded
/// one; the transformed integrand is then integrated adaptively. Returns `+∞` for
/// `p ≥ 1`, where the integral diverges. `rel` is relative to a first estimate.
pub fn integrate_endpoint_singular<F: FnMut(f64) -> f64>(
    rule: &GaussRule,
    mut f: F,
    len: f64,
    p: f64,
    rel: f64,
) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.0 {
        return rule.integrate_adaptive_rel(f, 0.0, len, rel);
    }
    let q = 1.0 / (1.0 - p);
    rule.integrate_adaptive_rel(
        |w| {
            let u = len * w.powf(q);
            f(u) * len * q * w.powf(q - 1.0)
        },
        0.0,
        1.0,
        rel,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_rule_is_exact_for_quintics() {
        let rule = GaussRule::new(3);
        let got = rule.integrate(|x| x.powi(5) - 2.0 * x.powi(4) + x, 0.0, 2.0);
        let exact = 64.0 / 6.0 - 2.0 * 32.0 / 5.0 + 2.0;
        assert!((got - exact).abs() < 1e-12);
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in 1..20 {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn endpoint_singularity_closed_forms() {
        let rule = GaussRule::new(5);
        // ∫₀^h s^{-1/2} ds = 2√h
        let h = 0.01;
        let got = integrate_endpoint_singular(&rule, |s| s.powf(-0.5), h, 0.5, 1e-14);
        assert!((got - 2.0 * h.sqrt()).abs() < 1e-12);
        // ∫₀^1 s^{-0.9} (1+s²) ds = 10 + 1/2.1
        let got = integrate_endpoint_singular(&rule, |s| s.powf(-0.9) * (1.0 + s * s), 1.0, 0.9, 1e-13);
        assert!((got - (10.0 + 1.0 / 2.1)).abs() < 1e-9, "{got}");
        assert!(integrate_endpoint_singular(&rule, |s| 1.0 / s, 1.0, 1.0, 1e-12).is_infinite());
    }
}
