use serde::{Deserialize, Serialize};

use super::{closed_form_distance, numerical_distance, DistanceField, Point};
use crate::coefficients::{pow_split, CoefficientField, GrusinParameters};
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    ClosedForm,
    DistanceField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallVolumeTable {
    pub center: Point,
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub method: VolumeMethod,
    /// Radii for which the ball contained only the centre cell.
    pub below_cell: Vec<bool>,
}

/// Measure of `{y : d(x;y) < r}` counted by whole cells. Returns the single-cell
/// measure and `true` when no node other than the centre is inside.
pub fn ball_volume(field: &DistanceField, r: f64) -> Result<(f64, bool)> {
    if !(r > 0.0) {
        return Err(Error::invalid("radius", format!("must be positive, got {r}")));
    }
    let count = field.distances().iter().filter(|&&d| d < r).count();
    let w = field.grid().node_weight();
    if count <= 1 {
        Ok((w, true))
    } else {
        Ok((count as f64 * w, false))
    }
}

/// `r^{(D,D')}` when `r ≥ |x₁|^{(1-δ₁,1-δ₁')}`, else `r^{n+m} |x₁|^{(β,β')}`, unit constant.
pub fn closed_form_ball_volume(params: &GrusinParameters, center: &Point, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("radius", format!("must be positive, got {r}")));
    }
    center.check(params)?;
    let e = params.derive();
    let a = center.x1_norm();
    if r >= pow_split(a, 1.0 - params.delta1, 1.0 - params.delta1p) {
        Ok(pow_split(r, e.d, e.dp))
    } else {
        Ok(r.powi(params.dim() as i32) * pow_split(a, e.beta, e.betap))
    }
}

impl BallVolumeTable {
    pub fn from_field(field: &DistanceField, center: Point, radii: &[f64]) -> Result<Self> {
        let mut volumes = Vec::with_capacity(radii.len());
        let mut below_cell = Vec::with_capacity(radii.len());
        for &r in radii {
            let (v, flag) = ball_volume(field, r)?;
            volumes.push(v);
            below_cell.push(flag);
        }
        Ok(Self {
            center,
            radii: radii.to_vec(),
            volumes,
            method: VolumeMethod::DistanceField,
            below_cell,
        })
    }

    /// Distance-field volumes on a separate grid for every radius, with extents
    /// fitted to the ball and about `nodes` nodes per axis, so that small and large
    /// balls are resolved alike. The centre is always a grid node.
    pub fn adaptive(
        coeffs: &CoefficientField,
        center: Point,
        radii: &[f64],
        nodes: usize,
        stencil_order: usize,
    ) -> Result<Self> {
        let params = &coeffs.params;
        center.check(params)?;
        if nodes < 9 {
            return Err(Error::invalid(
                "volume.nodes",
                format!("need at least 9 nodes per axis, got {nodes}"),
            ));
        }
        let coords = center.coords();
        let mut volumes = Vec::with_capacity(radii.len());
        let mut below_cell = Vec::with_capacity(radii.len());
        for &r in radii {
            if !(r > 0.0) {
                return Err(Error::invalid("radius", format!("must be positive, got {r}")));
            }
            let mut reach: Vec<f64> = (0..coords.len())
                .map(|axis| closed_form_reach(params, &center, axis, r).map(|q| REACH_SAFETY * q))
                .collect::<Result<_>>()?;
            let mut attempt = 0;
            let (v, flag) = loop {
                let (extents, counts) = fitted_axes(&coords, &reach, nodes);
                let grid = Grid::build(params, &extents, &counts)?;
                let field = numerical_distance(coeffs, &grid, &coords, stencil_order)?;
                if field.boundary_distance() > r {
                    break ball_volume(&field, r)?;
                }
                attempt += 1;
                if attempt >= 8 {
                    return Err(Error::Numerical(format!(
                        "ball of radius {r} does not fit a fitted grid"
                    )));
                }
                reach.iter_mut().for_each(|x| *x *= 1.6);
            };
            volumes.push(v);
            below_cell.push(flag);
        }
        Ok(Self {
            center,
            radii: radii.to_vec(),
            volumes,
            method: VolumeMethod::DistanceField,
            below_cell,
        })
    }

    pub fn closed_form(params: &GrusinParameters, center: Point, radii: &[f64]) -> Result<Self> {
        let volumes = radii
            .iter()
            .map(|&r| closed_form_ball_volume(params, &center, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            center,
            below_cell: vec![false; radii.len()],
            radii: radii.to_vec(),
            volumes,
            method: VolumeMethod::ClosedForm,
        })
    }

    /// Least-squares log–log slope of volume against radius over `[r_lo, r_hi]`.
    pub fn slope(&self, r_lo: f64, r_hi: f64) -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .radii
            .iter()
            .zip(&self.volumes)
            .filter(|(&r, _)| r >= r_lo && r <= r_hi)
            .map(|(&r, &v)| (r, v))
            .unzip();
        fit::loglog_slope(&xs, &ys)
    }
}

const REACH_SAFETY: f64 = 2.5;

/// Largest `|s|` with `D_δ(x; x + s e_axis) ≤ r` over both signs.
fn closed_form_reach(params: &GrusinParameters, center: &Point, axis: usize, r: f64) -> Result<f64> {
    let coords = center.coords();
    let mut best: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let dist = |s: f64| -> Result<f64> {
            let mut y = coords.clone();
            y[axis] += sign * s;
            closed_form_distance(params, center, &Point::from_coords(params, &y)?)
        };
        let mut hi = r.max(1e-12);
        let mut guard = 0;
        while dist(hi)? < r {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Numerical(
                    "closed-form distance does not grow along an axis".into(),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if dist(mid)? < r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.max(hi);
    }
    Ok(best)
}

/// Extents and odd node counts such that `coords` are nodes and
/// `[c - reach, c + reach]` fits on every axis.
fn fitted_axes(coords: &[f64], reach: &[f64], nodes: usize) -> (Vec<f64>, Vec<usize>) {
    let mut extents = Vec::with_capacity(coords.len());
    let mut counts = Vec::with_capacity(coords.len());
    for (&c, &q) in coords.iter().zip(reach) {
        let target = c.abs() + q;
        let mut h = q / ((nodes - 1) / 2) as f64;
        // a centre within half a cell of the origin is snapped instead
        if c.abs() >= 0.5 * h {
            let k = (c.abs() / h).round().max(1.0);
            h = c.abs() / k;
        }
        let half = (target / h).ceil() as usize;
        extents.push(half as f64 * h);
        counts.push(2 * half + 1);
    }
    (extents, counts)
}

/// Largest local doubling exponent `log(V_{k+1}/V_k) / log(r_{k+1}/r_k)` over
/// consecutive radii; equal to `log₂(|B(2r)|/|B(r)|)` on a doubling schedule.
pub fn doubling_exponent(table: &BallVolumeTable) -> Result<f64> {
    let radii = &table.radii;
    if radii.len() < 8 {
        return Err(Error::Data(format!("need at least 8 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::Data("radii must be positive and strictly increasing".into()));
    }
    if radii[radii.len() - 1] / radii[0] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Data("radii must span at least two decades".into()));
    }
    if table.volumes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Data("ball volumes are not monotone in the radius".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    for k in 0..radii.len() - 1 {
        let e = (table.volumes[k + 1] / table.volumes[k]).ln() / (radii[k + 1] / radii[k]).ln();
        worst = worst.max(e);
    }
    Ok(worst)
}
