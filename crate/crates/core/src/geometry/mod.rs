//! Control-metric geometry: the explicit quasi-distance `D_δ`, shortest-path
//! distance fields on grids, ball volumes and doubling exponents.

mod distance;
mod volume;

use serde::{Deserialize, Serialize};

pub use distance::{numerical_distance, segment_length, stencil_offsets, DistanceField};
pub use volume::{ball_volume, closed_form_ball_volume, doubling_exponent, BallVolumeTable, VolumeMethod};

use crate::coefficients::{pow_split, GrusinParameters};
use crate::error::{Error, Result};

/// A point `(x₁, x₂) ∈ ℝⁿ × ℝᵐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl Point {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>) -> Self {
        Self { x1, x2 }
    }

    /// Splits flat grid coordinates into the two blocks.
    pub fn from_coords(params: &GrusinParameters, coords: &[f64]) -> Result<Self> {
        if coords.len() != params.dim() {
            return Err(Error::Precondition(format!(
                "expected {} coordinates, got {}",
                params.dim(),
                coords.len()
            )));
        }
        Ok(Self {
            x1: coords[..params.n].to_vec(),
            x2: coords[params.n..].to_vec(),
        })
    }

    pub fn coords(&self) -> Vec<f64> {
        self.x1.iter().chain(&self.x2).copied().collect()
    }

    pub fn x1_norm(&self) -> f64 {
        norm(&self.x1)
    }

    fn check(&self, params: &GrusinParameters) -> Result<()> {
        if self.x1.len() != params.n || self.x2.len() != params.m {
            return Err(Error::Precondition(format!(
                "point has blocks of size ({}, {}), parameters need ({}, {})",
                self.x1.len(),
                self.x2.len(),
                params.n,
                params.m
            )));
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `Δ_δ(x; y)`: `|x₂-y₂| / (|x₁|+|y₁|)^{(δ₂,δ₂')}` while `|x₂-y₂| ≤ (|x₁|+|y₁|)^{(ρ,ρ')}`,
/// and `|x₂-y₂|^{(1-γ,1-γ')}` beyond. The branches agree on the switching surface.
pub fn delta_distance(params: &GrusinParameters, x: &Point, y: &Point) -> Result<f64> {
    x.check(params)?;
    y.check(params)?;
    let e = params.derive();
    let separation = diff_norm(&x.x2, &y.x2);
    if separation == 0.0 {
        return Ok(0.0);
    }
    let s = x.x1_norm() + y.x1_norm();
    if separation <= pow_split(s, e.rho, e.rhop) {
        Ok(separation / pow_split(s, params.delta2, params.delta2p))
    } else {
        Ok(pow_split(separation, 1.0 - e.gamma, 1.0 - e.gammap))
    }
}

/// `D_δ(x; y) = |x₁-y₁| / (|x₁|+|y₁|)^{(δ₁,δ₁')} + Δ_δ(x; y)`, with the first term
/// read as 0 when `x₁ = y₁`.
pub fn closed_form_distance(params: &GrusinParameters, x: &Point, y: &Point) -> Result<f64> {
    let delta = delta_distance(params, x, y)?;
    let gap = diff_norm(&x.x1, &y.x1);
    let first = if gap == 0.0 {
        0.0
    } else {
        gap / pow_split(x.x1_norm() + y.x1_norm(), params.delta1, params.delta1p)
    };
    Ok(first + delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x1: f64, x2: f64) -> Point {
        Point::new(vec![x1], vec![x2])
    }

    #[test]
    fn delta_distance_examples() {
        let g = GrusinParameters::classical();
        assert_eq!(delta_distance(&g, &p(0.3, 1.0), &p(-2.0, 1.0)).unwrap(), 0.0);
        assert_eq!(delta_distance(&g, &p(0.0, 1.0), &p(0.0, 1.0)).unwrap(), 0.0);
        // |x₁|+|y₁| = 1, |x₂-y₂| = 1: both branches give 1.
        assert!((delta_distance(&g, &p(0.5, 0.0), &p(0.5, 1.0)).unwrap() - 1.0).abs() < 1e-15);
        // origin to (0, 4): 4^{1/2} = 2
        assert!((delta_distance(&g, &p(0.0, 0.0), &p(0.0, 4.0)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        let g = GrusinParameters::classical();
        assert_eq!(closed_form_distance(&g, &p(0.7, -0.2), &p(0.7, -0.2)).unwrap(), 0.0);
        let flat = GrusinParameters::euclidean(2, 1);
        let x = Point::new(vec![1.0, 2.0], vec![0.5]);
        let y = Point::new(vec![-2.0, 6.0], vec![-1.5]);
        assert!((closed_form_distance(&flat, &x, &y).unwrap() - 7.0).abs() < 1e-14);
        let one = GrusinParameters::one_dimensional(0.5, 0.5);
        let d = closed_form_distance(&one, &Point::new(vec![0.25], vec![]), &Point::new(vec![1.0], vec![])).unwrap();
        assert!((d - 0.75 / 1.25f64.sqrt()).abs() < 1e-15);
        assert!((d - 0.6708).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = GrusinParameters::classical();
        assert!(closed_form_distance(&g, &Point::new(vec![0.0], vec![]), &p(0.0, 0.0)).is_err());
    }

    #[test]
    fn branches_agree_on_switching_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let params = GrusinParameters::new(
                rng.gen_range(1..3),
                rng.gen_range(1..3),
                rng.gen_range(0.0..0.95),
                rng.gen_range(0.0..0.95),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..3.0),
            )
            .unwrap();
            let e = params.derive();
            let s: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
            let sep = pow_split(s, e.rho, e.rhop);
            let small = sep / pow_split(s, params.delta2, params.delta2p);
            let large = pow_split(sep, 1.0 - e.gamma, 1.0 - e.gammap);
            assert!(
                (small - large).abs() <= 1e-12 * small.abs().max(1e-300),
                "{params:?} s={s}"
            );
        }
    }

    proptest! {
        #[test]
        fn closed_form_is_symmetric(
            a in prop::collection::vec(-5.0f64..5.0, 4),
            d1 in 0.0f64..0.95, d1p in 0.0f64..0.95, d2 in 0.0f64..3.0, d2p in 0.0f64..3.0,
        ) {
            let params = GrusinParameters::new(1, 1, d1, d1p, d2, d2p).unwrap();
            let x = p(a[0], a[1]);
            let y = p(a[2], a[3]);
            prop_assert_eq!(
                closed_form_distance(&params, &x, &y).unwrap(),
                closed_form_distance(&params, &y, &x).unwrap()
            );
        }
    }
}
