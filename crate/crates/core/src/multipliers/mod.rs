//! Fourier multipliers dominated by the Grušin form, their sublevel volumes
//! `V_F(r) = |{p : F(p) < r²}|`, Nash inequalities, Hardy's inequality and two
//! operator inequalities checked by spectral calculus.

mod inequalities;
mod nash;

pub use inequalities::{hardy_check, operator_inequality_checks, HardyConfig, HardyReport, InequalityReport};
pub use nash::{nash_check, NashConfig, NashReport, NashRow};

use serde::{Deserialize, Serialize};

use crate::coefficients::GrusinParameters;
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// Form of the x₁ symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `δ₁ ≥ δ₁′`: `L^{1-δ₁′}(1+L)^{-(δ₁-δ₁′)}`.
    Damped,
    /// `δ₁ < δ₁′`: `L^{1-δ₁} + L^{1-δ₁′}`.
    Sum,
}

/// `F(p) = a (F₁(|p₁|²) + F₂(|p₂|²))` with `F₂(L) = L^{α′}(1+L)^{α-α′}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub params: GrusinParameters,
    /// Free scale constant `a`.
    pub scale: f64,
}

impl MultiplierSpec {
    pub fn new(params: GrusinParameters, scale: f64) -> Result<Self> {
        let spec = Self { params, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid(
                "multiplier.scale",
                format!("must be positive, got {}", self.scale),
            ));
        }
        Ok(())
    }

    pub fn branch(&self) -> Branch {
        if self.params.delta1 >= self.params.delta1p {
            Branch::Damped
        } else {
            Branch::Sum
        }
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        Self { scale, ..*self }
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Symbol of the x₁ block at `L = |p₁|²`, without the scale.
    pub fn f1(&self, l: f64) -> f64 {
        if l <= 0.0 {
            return 0.0;
        }
        let (d, dp) = (self.params.delta1, self.params.delta1p);
        match self.branch() {
            Branch::Damped => l.powf(1.0 - dp) * (1.0 + l).powf(-(d - dp)),
            Branch::Sum => l.powf(1.0 - d) + l.powf(1.0 - dp),
        }
    }

    /// Symbol of the x₂ block at `L = |p₂|²`, without the scale.
    pub fn f2(&self, l: f64) -> f64 {
        if l <= 0.0 {
            return 0.0;
        }
        let e = self.params.derive();
        l.powf(e.alphap) * (1.0 + l).powf(e.alpha - e.alphap)
    }
}

/// `F(p)` with `L₁ = |p₁|²`, `L₂ = |p₂|²`.
pub fn multiplier_value(spec: &MultiplierSpec, p: &[f64]) -> Result<f64> {
    let n = spec.params.n;
    if p.len() != spec.dim() {
        return Err(Error::Precondition(format!(
            "frequency has {} components, expected {}",
            p.len(),
            spec.dim()
        )));
    }
    let l1: f64 = p[..n].iter().map(|x| x * x).sum();
    let l2: f64 = p[n..].iter().map(|x| x * x).sum();
    Ok(spec.scale * (spec.f1(l1) + spec.f2(l2)))
}

/// Volume of the unit ball in `k` dimensions.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// Largest `s ≥ 0` with `g(s²) < v` for a continuous increasing unbounded `g`
/// with `g(0) = 0`, by bracketing and bisection.
fn radial_inverse(g: impl Fn(f64) -> f64, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let f = |s: f64| g(s * s);
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(lo) >= v {
        lo *= 0.5;
        if lo == 0.0 {
            return 0.0;
        }
    }
    while f(hi) < v {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sublevel radius `R₁(v)` of the x₁ symbol (unscaled).
pub fn sublevel_radius_x1(spec: &MultiplierSpec, v: f64) -> f64 {
    radial_inverse(|l| spec.f1(l), v)
}

/// Sublevel radius `R₂(v)` of the x₂ symbol (unscaled).
pub fn sublevel_radius_x2(spec: &MultiplierSpec, v: f64) -> f64 {
    radial_inverse(|l| spec.f2(l), v)
}

/// Exact `V_F(r) = |{p : F(p) < r²}|`, integrating the x₂ sublevel ball over the
/// x₁ sublevel ball: `∫₀^{R₁} nω_n s^{n-1} ω_m R₂(r²/a - F₁(s²))^m ds`.
pub fn vf_volume(spec: &MultiplierSpec, r: f64) -> Result<f64> {
    check_radius(r)?;
    let (n, m) = (spec.params.n, spec.params.m);
    let v = r * r / spec.scale;
    let r1 = sublevel_radius_x1(spec, v);
    if m == 0 {
        return Ok(unit_ball_volume(n) * r1.powi(n as i32));
    }
    let rule = GaussRule::new(15);
    let (wn, wm) = (unit_ball_volume(n), unit_ball_volume(m));
    let integral = rule.integrate_adaptive_rel(
        |s| {
            let rest = v - spec.f1(s * s);
            if rest <= 0.0 {
                return 0.0;
            }
            n as f64 * wn * s.powi(n as i32 - 1) * wm * sublevel_radius_x2(spec, rest).powi(m as i32)
        },
        0.0,
        r1,
        1e-10,
    );
    Ok(integral)
}

/// `V_{F₁}(r) V_{F₂}(r)`, the separable product of the two block volumes. It is
/// comparable to [`vf_volume`] within constants and has the same exponents.
pub fn vf_volume_product(spec: &MultiplierSpec, r: f64) -> Result<f64> {
    check_radius(r)?;
    let (n, m) = (spec.params.n, spec.params.m);
    let v = r * r / spec.scale;
    let a = unit_ball_volume(n) * sublevel_radius_x1(spec, v).powi(n as i32);
    let b = if m == 0 {
        1.0
    } else {
        unit_ball_volume(m) * sublevel_radius_x2(spec, v).powi(m as i32)
    };
    Ok(a * b)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("r", format!("radius must be positive, got {r}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{geometric_grid, loglog_slope};
    use proptest::prelude::*;

    fn spec(n: usize, m: usize, d1: f64, d1p: f64, d2: f64, d2p: f64) -> MultiplierSpec {
        MultiplierSpec::new(GrusinParameters::new(n, m, d1, d1p, d2, d2p).unwrap(), 1.0).unwrap()
    }

    fn slope(spec: &MultiplierSpec, lo: f64, hi: f64) -> f64 {
        let rs = geometric_grid(lo, hi, 9);
        let vs: Vec<f64> = rs.iter().map(|&r| vf_volume(spec, r).unwrap()).collect();
        loglog_slope(&rs, &vs).unwrap()
    }

    #[test]
    fn symbol_values() {
        let s = spec(1, 1, 0.0, 0.0, 1.0, 1.0);
        assert_eq!(multiplier_value(&s, &[0.0, 0.0]).unwrap(), 0.0);
        assert!((multiplier_value(&s, &[0.0, 4.0]).unwrap() - 4.0).abs() < 1e-14);
        let flat = MultiplierSpec::new(GrusinParameters::euclidean(2, 1), 1.0).unwrap();
        let p = [0.3, -1.2, 2.5];
        let p2: f64 = p.iter().map(|x| x * x).sum();
        assert!((multiplier_value(&flat, &p).unwrap() - p2).abs() < 1e-12);
        assert!(multiplier_value(&flat, &[1.0]).is_err());
        assert_eq!(spec(1, 1, 0.2, 0.4, 0.0, 0.0).branch(), Branch::Sum);
    }

    #[test]
    fn flat_volume_is_the_euclidean_ball() {
        for (n, m) in [(1, 0), (1, 1), (2, 1), (1, 2), (3, 0)] {
            let s = MultiplierSpec::new(GrusinParameters::euclidean(n, m), 1.0).unwrap();
            for r in [0.1f64, 1.0, 7.0] {
                let exact = unit_ball_volume(n + m) * r.powi((n + m) as i32);
                assert!(
                    (vf_volume(&s, r).unwrap() / exact - 1.0).abs() < 1e-8,
                    "n={n} m={m} r={r}"
                );
            }
        }
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn classical_volume_is_cubic() {
        // {p₁² + |p₂| < r²} has area (8/3) r³
        let s = spec(1, 1, 0.0, 0.0, 1.0, 1.0);
        for r in [0.01f64, 1.0, 100.0] {
            assert!((vf_volume(&s, r).unwrap() / (8.0 / 3.0 * r.powi(3)) - 1.0).abs() < 1e-8);
        }
        assert!((slope(&s, 100.0, 1e4) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn slopes_interpolate_between_dimensions() {
        for s in [
            spec(1, 1, 0.2, 0.0, 1.0, 0.5),
            spec(1, 1, 0.0, 0.3, 0.5, 1.0),
            spec(2, 1, 0.4, 0.1, 0.8, 0.2),
            spec(1, 0, 0.6, 0.2, 0.0, 0.0),
        ] {
            let e = s.params.derive();
            let small = slope(&s, 1e-5, 1e-4);
            let large = slope(&s, 1e4, 1e5);
            assert!((small / e.dp - 1.0).abs() < 0.05, "{small} vs D'={}", e.dp);
            assert!((large / e.d - 1.0).abs() < 0.05, "{large} vs D={}", e.d);
        }
    }

    #[test]
    fn product_volume_is_comparable_and_scales() {
        let s = spec(1, 1, 0.2, 0.0, 1.0, 0.5);
        for r in geometric_grid(1e-3, 1e3, 13) {
            let ratio = vf_volume_product(&s, r).unwrap() / vf_volume(&s, r).unwrap();
            assert!((1.0..8.0).contains(&ratio), "ratio {ratio} at r={r}");
        }
        // V_{aF}(r) = V_F(r/√a)
        let a = 3.7;
        let scaled = s.with_scale(a);
        assert!((vf_volume(&scaled, 2.0).unwrap() / vf_volume(&s, 2.0 / a.sqrt()).unwrap() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn volume_is_nondecreasing(d1 in 0.0..0.9f64, d1p in 0.0..0.9f64, d2 in 0.0..2.0f64, d2p in 0.0..2.0f64,
                                   r in 1e-3..1e3f64, k in 1.0..4.0f64) {
            let s = spec(1, 1, d1, d1p, d2, d2p);
            prop_assert!(vf_volume(&s, r * k).unwrap() >= vf_volume(&s, r).unwrap() * (1.0 - 1e-9));
        }

        #[test]
        fn product_volume_is_multiplicative(d1 in 0.0..0.9f64, d1p in 0.0..0.9f64, d2 in 0.0..2.0f64,
                                            d2p in 0.0..2.0f64, r in 1e-3..1e3f64) {
            let s = spec(1, 1, d1, d1p, d2, d2p);
            let block1 = spec(1, 0, d1, d1p, 0.0, 0.0);
            let v2 = unit_ball_volume(1) * sublevel_radius_x2(&s, r * r);
            let expected = vf_volume_product(&block1, r).unwrap() * v2;
            prop_assert!((vf_volume_product(&s, r).unwrap() / expected - 1.0).abs() < 1e-12);
        }

        #[test]
        fn symbol_is_monotone(d1 in 0.0..0.9f64, d1p in 0.0..0.9f64, d2 in 0.0..2.0f64, d2p in 0.0..2.0f64,
                              l in 0.0..1e4f64, k in 1.0..3.0f64) {
            let s = spec(1, 1, d1, d1p, d2, d2p);
            prop_assert!(s.f1(l * k) >= s.f1(l) && s.f2(l * k) >= s.f2(l));
        }
    }
}
