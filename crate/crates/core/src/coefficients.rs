//! Exponent algebra and the degenerate coefficient representatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise power `a^{(α,α')}`: `a^α` for `a ≤ 1` and `a^{α'}` for `a ≥ 1`.
///
/// The two branches agree at `a = 1`, so the function is continuous in `a`.
pub fn piecewise_power(a: f64, alpha: f64, alphap: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!(
            "piecewise power needs a non-negative base, got {a}"
        )));
    }
    Ok(pow_split(a, alpha, alphap))
}

/// Unchecked [`piecewise_power`] for internal callers that already know `a ≥ 0`.
#[inline]
pub(crate) fn pow_split(a: f64, alpha: f64, alphap: f64) -> f64 {
    if a <= 1.0 {
        a.powf(alpha)
    } else {
        a.powf(alphap)
    }
}

/// The representative `|x|^{2δ}(1+|x|²)^{δ'-δ}` evaluated at a point of ℝⁿ.
pub fn coefficient(x: &[f64], delta: f64, deltap: f64) -> Result<f64> {
    if !(delta >= 0.0) || !(deltap >= 0.0) {
        return Err(Error::Domain(format!(
            "coefficient exponents must be non-negative, got δ={delta}, δ'={deltap}"
        )));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(radial_coefficient(r, delta, deltap))
}

/// [`coefficient`] as a function of `r = |x|`.
#[inline]
pub fn radial_coefficient(r: f64, delta: f64, deltap: f64) -> f64 {
    let r2 = r * r;
    let core = if delta == 0.0 { 1.0 } else { r.powf(2.0 * delta) };
    if deltap == delta {
        core
    } else {
        core * (1.0 + r2).powf(deltap - delta)
    }
}

/// Exponents `(n, m, δ₁, δ₁', δ₂, δ₂')` of a Grušin operator
/// `-∇_{x₁}·(c_{δ₁,δ₁'}(x₁)∇_{x₁}) - c_{δ₂,δ₂'}(x₁)Δ_{x₂}` on ℝⁿ×ℝᵐ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrusinParameters {
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    pub delta1: f64,
    pub delta1p: f64,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default)]
    pub delta2p: f64,
}

impl GrusinParameters {
    pub fn new(n: usize, m: usize, delta1: f64, delta1p: f64, delta2: f64, delta2p: f64) -> Result<Self> {
        let params = Self {
            n,
            m,
            delta1,
            delta1p,
            delta2,
            delta2p,
        };
        params.validate()?;
        Ok(params)
    }

    /// Constant coefficients on ℝⁿ×ℝᵐ.
    pub fn euclidean(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            delta1: 0.0,
            delta1p: 0.0,
            delta2: 0.0,
            delta2p: 0.0,
        }
    }

    /// The classical Grušin operator `-∂₁² - x₁²∂₂²` (n = m = 1, δ₂ = δ₂' = 1).
    pub fn classical() -> Self {
        Self {
            n: 1,
            m: 1,
            delta1: 0.0,
            delta1p: 0.0,
            delta2: 1.0,
            delta2p: 1.0,
        }
    }

    /// One-dimensional operator with coefficient `|x|^{2δ}(1+x²)^{δ'-δ}`.
    pub fn one_dimensional(delta: f64, deltap: f64) -> Self {
        Self {
            n: 1,
            m: 0,
            delta1: delta,
            delta1p: deltap,
            delta2: 0.0,
            delta2p: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("params.n", "n must be at least 1"));
        }
        for (field, value) in [("params.delta1", self.delta1), ("params.delta1p", self.delta1p)] {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::invalid(
                    field,
                    format!("{value} violates the constraint δ₁, δ₁' ∈ [0,1)"),
                ));
            }
        }
        for (field, value) in [("params.delta2", self.delta2), ("params.delta2p", self.delta2p)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::invalid(
                    field,
                    format!("{value} violates the constraint δ₂, δ₂' ≥ 0"),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn derive(&self) -> DerivedExponents {
        DerivedExponents::from_params(self)
    }
}

/// Dimensions and auxiliary exponents derived from [`GrusinParameters`].
///
/// Unprimed values govern small scales (local), primed values large scales (global).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub d: f64,
    pub dp: f64,
    pub beta: f64,
    pub betap: f64,
    pub rho: f64,
    pub rhop: f64,
    pub gamma: f64,
    pub gammap: f64,
    pub sigma: f64,
    pub sigmap: f64,
    pub alpha: f64,
    pub alphap: f64,
    pub doubling_dim: f64,
}

impl DerivedExponents {
    pub fn from_params(p: &GrusinParameters) -> Self {
        let n = p.n as f64;
        let m = p.m as f64;
        let dim = |d1: f64, d2: f64| (n + m * (1.0 + d2 - d1)) / (1.0 - d1);
        let d = dim(p.delta1, p.delta2);
        let dp = dim(p.delta1p, p.delta2p);
        let rho = 1.0 + p.delta2 - p.delta1;
        let rhop = 1.0 + p.delta2p - p.delta1p;
        Self {
            d,
            dp,
            beta: n * p.delta1 + m * p.delta2,
            betap: n * p.delta1p + m * p.delta2p,
            rho,
            rhop,
            gamma: p.delta2 / rho,
            gammap: p.delta2p / rhop,
            sigma: 1.0 / (1.0 - p.delta1),
            sigmap: 1.0 / (1.0 - p.delta1p),
            alpha: (1.0 - p.delta1) / rho,
            alphap: (1.0 - p.delta1p) / rhop,
            doubling_dim: d.max(dp),
        }
    }
}

/// Block-diagonal coefficients `diag(c_{δ₁,δ₁'}(x₁) I_n, c_{δ₂,δ₂'}(x₁) I_m)`.
///
/// Both blocks depend on `|x₁|` only. An optional freeze radius replaces the
/// coefficients inside `|x₁| ≤ r₀` by their values at `|x₁| = r₀`, which gives the
/// non-degenerate comparison operator used by the kernel-comparison experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub params: GrusinParameters,
    #[serde(default)]
    pub freeze_radius: Option<f64>,
}

impl CoefficientField {
    pub fn new(params: GrusinParameters) -> Self {
        Self {
            params,
            freeze_radius: None,
        }
    }

    pub fn frozen(params: GrusinParameters, radius: f64) -> Self {
        Self {
            params,
            freeze_radius: Some(radius),
        }
    }

    #[inline]
    fn effective_radius(&self, r: f64) -> f64 {
        match self.freeze_radius {
            Some(r0) if r < r0 => r0,
            _ => r,
        }
    }

    /// `c_{δ₁,δ₁'}` at `|x₁| = r`.
    #[inline]
    pub fn block1(&self, r: f64) -> f64 {
        let r = self.effective_radius(r);
        radial_coefficient(r, self.params.delta1, self.params.delta1p)
    }

    /// `c_{δ₂,δ₂'}` at `|x₁| = r`.
    #[inline]
    pub fn block2(&self, r: f64) -> f64 {
        let r = self.effective_radius(r);
        radial_coefficient(r, self.params.delta2, self.params.delta2p)
    }

    /// Coefficient attached to grid axis `axis` (axes `0..n` belong to x₁).
    #[inline]
    pub fn axis(&self, axis: usize, r: f64) -> f64 {
        if axis < self.params.n {
            self.block1(r)
        } else {
            self.block2(r)
        }
    }

    /// Local singularity exponent of `c_axis` at `x₁ = 0`, zero when frozen.
    pub(crate) fn local_exponent(&self, axis: usize) -> f64 {
        if matches!(self.freeze_radius, Some(r0) if r0 > 0.0) {
            return 0.0;
        }
        if axis < self.params.n {
            self.params.delta1
        } else {
            self.params.delta2
        }
    }

    /// Grid samples of the block coefficients at the given `|x₁|` values.
    pub fn sample(&self, radii: &[f64]) -> Vec<(f64, f64)> {
        radii.iter().map(|&r| (self.block1(r), self.block2(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn piecewise_power_branches() {
        assert_eq!(piecewise_power(0.5, 2.0, 3.0).unwrap(), 0.25);
        assert_eq!(piecewise_power(2.0, 2.0, 3.0).unwrap(), 8.0);
        assert_eq!(piecewise_power(1.0, 7.0, -4.0).unwrap(), 1.0);
        assert!(matches!(piecewise_power(-0.1, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn coefficient_examples() {
        for x in [[0.0, 0.0], [3.0, -4.0], [1e-9, 2.0]] {
            assert_eq!(coefficient(&x, 0.0, 0.0).unwrap(), 1.0);
        }
        assert!((coefficient(&[1.0], 0.5, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let expected = 2f64.sqrt() * 5f64.powf(0.25);
        let got = coefficient(&[2.0], 0.25, 0.5).unwrap();
        assert!((got - expected).abs() < 1e-13);
        assert!((got - 2.1147).abs() < 1e-4);
        assert_eq!(coefficient(&[0.0], 0.3, 0.1).unwrap(), 0.0);
        assert!(coefficient(&[0.0], -0.3, 0.1).is_err());
    }

    #[test]
    fn derived_exponent_examples() {
        let e = GrusinParameters::euclidean(1, 1).derive();
        assert_eq!(
            (e.d, e.dp, e.beta, e.rho, e.gamma, e.alpha),
            (2.0, 2.0, 0.0, 1.0, 0.0, 1.0)
        );

        let g = GrusinParameters::classical().derive();
        assert_eq!(
            (g.d, g.dp, g.beta, g.rho, g.gamma, g.alpha),
            (3.0, 3.0, 1.0, 2.0, 0.5, 0.5)
        );

        let p = GrusinParameters::new(2, 1, 0.5, 0.0, 0.0, 0.0).unwrap();
        let e = p.derive();
        assert!((e.d - 5.0).abs() < 1e-14);
        assert!((e.dp - 3.0).abs() < 1e-14);
        assert_eq!(e.doubling_dim, e.d);
    }

    #[test]
    fn classical_dimension_matches_volume_integration() {
        // Brute-force measure of the box-ball {|x₁| < r, |x₂| < r·|x₁| + r²} for the
        // metric dx₁² + dx₂²/x₁²; the homogeneous dimension is the scaling exponent.
        let volume = |r: f64| {
            let k = 20_000;
            let dx = 2.0 * r / k as f64;
            (0..k)
                .map(|i| {
                    let x1 = -r + (i as f64 + 0.5) * dx;
                    2.0 * (r * x1.abs() + r * r) * dx
                })
                .sum::<f64>()
        };
        let slope = (volume(0.2).ln() - volume(0.1).ln()) / 2f64.ln();
        assert!((slope - GrusinParameters::classical().derive().d).abs() < 1e-6);
    }

    #[test]
    fn validation_names_the_violated_constraint() {
        let err = GrusinParameters::new(1, 1, 1.2, 0.0, 0.0, 0.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("delta1") && msg.contains("[0,1)"), "{msg}");
        assert!(GrusinParameters::new(0, 1, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(GrusinParameters::new(1, 1, 0.0, 0.0, -1.0, 0.0).is_err());
        assert!(GrusinParameters::new(1, 0, 0.0, 0.99, 0.0, 0.0).is_ok());
    }

    #[test]
    fn equivalence_band_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let delta: f64 = rng.gen_range(0.0..2.0);
            let deltap: f64 = rng.gen_range(0.0..2.0);
            let r = 10f64.powf(rng.gen_range(-6.0..6.0));
            let c = radial_coefficient(r, delta, deltap);
            let reference = pow_split(r, 2.0 * delta, 2.0 * deltap);
            let band = 2f64.powf((deltap - delta).abs());
            let ratio = c / reference;
            assert!(
                ratio >= (1.0 / band) * (1.0 - 1e-12) && ratio <= band * (1.0 + 1e-12),
                "r={r} δ={delta} δ'={deltap} ratio={ratio}"
            );
        }
    }

    #[test]
    fn dimension_lower_bound_and_equality_case() {
        for n in 1..=3 {
            for m in 0..=2 {
                for i in 0..10 {
                    for j in 0..10 {
                        let d1 = i as f64 * 0.099;
                        let d2 = j as f64 * 0.3;
                        let p = GrusinParameters::new(n, m, d1, 0.0, d2, 0.0).unwrap();
                        let e = p.derive();
                        let base = (n + m) as f64;
                        assert!(e.d >= base - 1e-12);
                        // with m = 0 the block-2 exponent does not enter D
                        let trivial = d1 == 0.0 && (d2 == 0.0 || m == 0);
                        assert_eq!((e.d - base).abs() < 1e-12, trivial, "{p:?}");
                        assert!((0.0..1.0).contains(&e.gamma));
                        assert!(e.alpha > 0.0 && e.alpha <= 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn frozen_field_is_constant_inside_radius() {
        let field = CoefficientField::frozen(GrusinParameters::classical(), 0.5);
        assert_eq!(field.block2(0.0), field.block2(0.5));
        assert_eq!(field.block2(0.2), 0.25);
        assert_eq!(field.block2(2.0), 4.0);
        assert_eq!(field.local_exponent(1), 0.0);
    }

    proptest! {
        #[test]
        fn piecewise_power_is_continuous_at_one(alpha in -5.0f64..5.0, alphap in -5.0f64..5.0, eps in 1e-12f64..1e-6) {
            let below = piecewise_power(1.0 - eps, alpha, alphap).unwrap();
            let above = piecewise_power(1.0 + eps, alpha, alphap).unwrap();
            prop_assert!((below - 1.0).abs() < 10.0 * eps);
            prop_assert!((above - 1.0).abs() < 10.0 * eps);
        }

        #[test]
        fn dimension_is_monotone(n in 1usize..4, m in 0usize..3, d1 in 0.0f64..0.9, d2 in 0.0f64..3.0, step in 0.0f64..0.09) {
            let base = GrusinParameters::new(n, m, d1, 0.0, d2, 0.0).unwrap().derive().d;
            let more_d1 = GrusinParameters::new(n, m, d1 + step, 0.0, d2, 0.0).unwrap().derive().d;
            let more_d2 = GrusinParameters::new(n, m, d1, 0.0, d2 + step, 0.0).unwrap().derive().d;
            prop_assert!(more_d1 >= base - 1e-12);
            prop_assert!(more_d2 >= base - 1e-12);
        }
    }
}
