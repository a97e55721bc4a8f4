use serde::{Deserialize, Serialize};

use super::{EvolutionMethod, Semigroup};
use crate::coefficients::{CoefficientField, GrusinParameters};
use crate::discretization::{Boundary, DivergenceFormOperator, Grid};
use crate::error::{Error, Result};
use crate::fit;
use crate::geometry::{ball_volume, closed_form_ball_volume, DistanceField, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub max_deviation: f64,
    /// `(source unknown, t, Σ w K_t)`.
    pub samples: Vec<(usize, f64, f64)>,
}

/// `max |1 - Σ_x w_x K_t(x;y)|` over the given sources and times.
pub fn conservation_report(semi: &Semigroup, times: &[f64], sources: &[usize]) -> Result<ConservationReport> {
    let table = semi.kernel_table(sources, times)?;
    let samples: Vec<(usize, f64, f64)> = table
        .iter()
        .flat_map(|col| col.iter().map(|k| (k.source, k.t, k.mass())))
        .collect();
    let max_deviation = samples.iter().map(|s| (1.0 - s.2).abs()).fold(0.0, f64::max);
    Ok(ConservationReport { max_deviation, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub t: f64,
    pub sup_diagonal: f64,
    /// Operator unknown attaining the supremum.
    pub argmax: usize,
    /// `e^{-d(candidates; ∂)²/4t}`, the Gaussian weight of the outer boundary.
    pub boundary_tail: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub samples: Vec<DecaySample>,
    pub tail_limit: f64,
}

impl DecaySeries {
    /// Log–log slope of `sup_x K_t(x;x)` over accepted times in `[t_lo, t_hi]`.
    pub fn slope(&self, t_lo: f64, t_hi: f64) -> Result<f64> {
        let (ts, ks): (Vec<f64>, Vec<f64>) = self
            .samples
            .iter()
            .filter(|s| s.accepted && s.t >= t_lo * (1.0 - 1e-12) && s.t <= t_hi * (1.0 + 1e-12))
            .map(|s| (s.t, s.sup_diagonal))
            .unzip();
        if ts.len() < 2 {
            return Err(Error::Data(format!(
                "fewer than two accepted times in [{t_lo}, {t_hi}]"
            )));
        }
        fit::loglog_slope(&ts, &ks)
    }
}

/// `sup_x K_t(x;x)` over the candidate unknowns. Times whose boundary weight
/// exceeds `tail_limit` are kept but marked as not accepted.
pub fn ondiagonal_decay(
    semi: &Semigroup,
    candidates: &[usize],
    times: &[f64],
    boundary_distance: Option<f64>,
    tail_limit: f64,
) -> Result<DecaySeries> {
    if candidates.is_empty() {
        return Err(Error::Precondition("no candidate points for the supremum".into()));
    }
    let diag = semi.diagonal(candidates, times)?;
    let samples = times
        .iter()
        .zip(diag)
        .map(|(&t, row)| {
            let (k, &sup) = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty candidates");
            let boundary_tail = boundary_distance.map_or(0.0, |d| (-d * d / (4.0 * t)).exp());
            DecaySample {
                t,
                sup_diagonal: sup,
                argmax: candidates[k],
                boundary_tail,
                accepted: boundary_tail <= tail_limit,
            }
        })
        .collect();
    Ok(DecaySeries { samples, tail_limit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianReport {
    /// `max K_t(x;y) (|B(x;√t)||B(y;√t)|)^{1/2} e^{d²/(4(1+ε)t)}`.
    pub upper_constant: f64,
    /// Grid nodes `(x, y)` and time of the maximiser.
    pub upper_argmax: (usize, usize, f64),
    /// `min K_t(x;x) |B(x;√t)|`.
    pub lower_constant: f64,
    pub lower_argmin: (usize, f64),
    /// Largest `K_t(x;y) (|B(x;√t)||B(y;√t)|)^{1/2}` among pairs with `d²/4t ≥ 25`, if any.
    pub far_field_ratio: Option<f64>,
    pub epsilon: f64,
    pub exponent_cap: f64,
    pub pairs_used: usize,
}

/// Fits the Gaussian upper constant and the on-diagonal lower constant over all
/// ordered pairs of sample unknowns. `fields[i]` is the distance field seeded at
/// `samples[i]`. Pairs with `d²/4t` above `exponent_cap` are left out of the upper
/// fit: there the grid kernel follows lattice rather than Gaussian tails.
pub fn gaussian_bounds(
    semi: &Semigroup,
    samples: &[usize],
    fields: &[DistanceField],
    times: &[f64],
    epsilon: f64,
    exponent_cap: f64,
) -> Result<GaussianReport> {
    if samples.len() != fields.len() || samples.is_empty() {
        return Err(Error::Precondition("need one distance field per sample point".into()));
    }
    let op = semi.operator();
    let volumes: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| times.iter().map(|t| ball_volume(f, t.sqrt()).map(|v| v.0)).collect())
        .collect::<Result<_>>()?;
    let table = semi.kernel_table(samples, times)?;
    let mut upper = (0.0f64, (0, 0, 0.0));
    let mut lower = (f64::INFINITY, (0, 0.0));
    let mut far: Option<f64> = None;
    let mut pairs_used = 0;
    for (i, col) in table.iter().enumerate() {
        let y = op.grid_node(samples[i]);
        for (ti, slice) in col.iter().enumerate() {
            let t = times[ti];
            for (j, &xi) in samples.iter().enumerate() {
                let x = op.grid_node(xi);
                let k = slice.values[xi];
                let d = fields[i].distance(x);
                let volume_factor = (volumes[i][ti] * volumes[j][ti]).sqrt();
                let e = d * d / (4.0 * t);
                if i == j && k * volumes[j][ti] < lower.0 {
                    lower = (k * volumes[j][ti], (x, t));
                }
                if e >= 25.0 && e.is_finite() {
                    let r = k * volume_factor;
                    far = Some(far.map_or(r, |f: f64| f.max(r)));
                }
                if e <= exponent_cap {
                    pairs_used += 1;
                    let a = k * volume_factor * (e / (1.0 + epsilon)).exp();
                    if a > upper.0 {
                        upper = (a, (x, y, t));
                    }
                }
            }
        }
    }
    Ok(GaussianReport {
        upper_constant: upper.0,
        upper_argmax: upper.1,
        lower_constant: lower.0,
        lower_argmin: lower.1,
        far_field_ratio: far,
        epsilon,
        exponent_cap,
        pairs_used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSample {
    pub t: f64,
    pub sup_difference: f64,
    /// `|B(x_A; t/ρ)|⁻¹ (ρ²/t)^{-1/2} e^{-ρ²/4t}` with the closed-form volume.
    pub reference: f64,
    /// `ρ²/4t`.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub r_cut: f64,
    pub freeze_radius: f64,
    /// `d₁(A; U)` under the frozen operator.
    pub rho: f64,
    pub samples: Vec<ComparisonSample>,
    /// `max sup_difference / reference`.
    pub prefactor: f64,
}

impl ComparisonReport {
    /// Slope of `log sup|K₁ - K₂|` against `ρ²/4t` over samples with a non-zero difference.
    pub fn slope(&self) -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .samples
            .iter()
            .filter(|s| s.sup_difference > 0.0)
            .map(|s| (s.exponent, s.sup_difference.ln()))
            .unzip();
        Ok(fit::linear_fit(&xs, &ys)?.0)
    }

    pub fn max_difference(&self) -> f64 {
        self.samples.iter().map(|s| s.sup_difference).fold(0.0, f64::max)
    }
}

/// Compares the true operator with the one whose coefficients are frozen inside
/// `U = {|x₁| ≤ r_cut/2}`, on kernels between points of `region ⊂ {|x₁| > r_cut}`.
#[allow(clippy::too_many_arguments)]
pub fn kernel_comparison(
    params: &GrusinParameters,
    grid: &Grid,
    boundary: Boundary,
    method: EvolutionMethod,
    r_cut: f64,
    region: &[usize],
    times: &[f64],
    stencil_order: usize,
) -> Result<ComparisonReport> {
    if !(r_cut > 0.0) {
        return Err(Error::invalid("r_cut", "must be positive"));
    }
    if region.is_empty() || region.iter().any(|&x| x >= grid.len() || grid.x1_norm(x) <= r_cut) {
        return Err(Error::Precondition(format!(
            "region must be non-empty and lie in |x₁| > {r_cut}"
        )));
    }
    let r0 = 0.5 * r_cut;
    let frozen = CoefficientField::frozen(*params, r0);
    let original = CoefficientField::new(*params);
    let op1 = DivergenceFormOperator::assemble(grid, &frozen, boundary)?;
    let op2 = DivergenceFormOperator::assemble(grid, &original, boundary)?;
    let inner: Vec<usize> = (0..grid.len()).filter(|&x| grid.x1_norm(x) <= r0).collect();
    let rho = DistanceField::from_nodes(&frozen, grid, region, stencil_order)?.min_over(&inner);
    let s1 = Semigroup::new(&op1, method)?;
    let s2 = Semigroup::new(&op2, method)?;
    let index = |op: &DivergenceFormOperator| -> Result<Vec<usize>> {
        region
            .iter()
            .map(|&x| {
                op.index_of(x)
                    .ok_or_else(|| Error::Precondition("region node removed by boundary mode".into()))
            })
            .collect()
    };
    let (a1, a2) = (index(&op1)?, index(&op2)?);
    let k1 = s1.kernel_table(&a1, times)?;
    let k2 = s2.kernel_table(&a2, times)?;
    let nearest = *region
        .iter()
        .min_by(|&&a, &&b| grid.x1_norm(a).total_cmp(&grid.x1_norm(b)))
        .expect("non-empty region");
    let anchor = Point::from_coords(params, &grid.coords(nearest))?;
    let mut samples = Vec::with_capacity(times.len());
    let mut prefactor: f64 = 0.0;
    for (ti, &t) in times.iter().enumerate() {
        let mut sup: f64 = 0.0;
        for (col1, col2) in k1.iter().zip(&k2) {
            for (&x1, &x2) in a1.iter().zip(&a2) {
                sup = sup.max((col1[ti].values[x1] - col2[ti].values[x2]).abs());
            }
        }
        let exponent = rho * rho / (4.0 * t);
        let reference = if rho.is_finite() && rho > 0.0 {
            closed_form_ball_volume(params, &anchor, t / rho)?.recip() * (rho * rho / t).powf(-0.5) * (-exponent).exp()
        } else {
            f64::NAN
        };
        if reference > 0.0 {
            prefactor = prefactor.max(sup / reference);
        }
        samples.push(ComparisonSample {
            t,
            sup_difference: sup,
            reference,
            exponent,
        });
    }
    Ok(ComparisonReport {
        r_cut,
        freeze_radius: r0,
        rho,
        samples,
        prefactor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationLevel {
    pub counts: Vec<usize>,
    pub spacing: f64,
    /// Extremes of the Neumann kernel over pairs on opposite sides of `x₁ = 0`.
    pub cross_max: f64,
    pub cross_min: f64,
    /// `max |K^N - K^D|` over same-side pairs off the hyperplane.
    pub gap: f64,
    /// Total conductance between nodes on `x₁ = 0` and the rest.
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub delta1: f64,
    pub strongly_degenerate: bool,
    pub t: f64,
    pub levels: Vec<SeparationLevel>,
    /// Fitted `b, c` in `K_t(x;y) ≥ b |B(y;√t)|⁻¹ e^{-c d²/t}` on the finest level.
    pub lower_b: f64,
    pub lower_c: f64,
}

impl SeparationReport {
    /// Gap never grows under refinement, up to `tol`.
    pub fn gap_non_increasing(&self, tol: f64) -> bool {
        self.levels.windows(2).all(|w| w[1].gap <= w[0].gap + tol)
    }

    pub fn min_gap(&self) -> f64 {
        self.levels.iter().map(|l| l.gap).fold(f64::INFINITY, f64::min)
    }
}

/// Weak/strong degeneracy dichotomy for `n = 1`: Neumann kernels across the
/// hyperplane and the Dirichlet/Neumann gap on `levels` successively refined grids.
#[allow(clippy::too_many_arguments)]
pub fn separation_check(
    params: &GrusinParameters,
    extents: &[f64],
    base_counts: &[usize],
    levels: usize,
    t: f64,
    sources: &[Vec<f64>],
    method: EvolutionMethod,
    stencil_order: usize,
) -> Result<SeparationReport> {
    if params.n != 1 {
        return Err(Error::Precondition("separation check needs n = 1".into()));
    }
    if levels == 0 || sources.is_empty() {
        return Err(Error::Precondition("need at least one level and one source".into()));
    }
    if sources.iter().any(|s| s.first().copied().unwrap_or(0.0) == 0.0) {
        return Err(Error::Precondition("sources must lie off the hyperplane x₁ = 0".into()));
    }
    let coeffs = CoefficientField::new(*params);
    let mut grid = Grid::build(params, extents, base_counts)?;
    let mut out = Vec::with_capacity(levels);
    let mut lower = (f64::NAN, f64::NAN);
    for level in 0..levels {
        if level > 0 {
            grid = grid.refined();
        }
        let neumann = DivergenceFormOperator::assemble(&grid, &coeffs, Boundary::NeumannTruncation)?;
        let dirichlet = DivergenceFormOperator::assemble(&grid, &coeffs, Boundary::DirichletOrigin)?;
        let sn = Semigroup::new(&neumann, method)?;
        let sd = Semigroup::new(&dirichlet, method)?;
        let nodes: Vec<usize> = sources
            .iter()
            .map(|s| grid.nearest_node(s).map(|p| p.0))
            .collect::<Result<_>>()?;
        let (mut cross_max, mut cross_min, mut gap) = (0.0f64, f64::INFINITY, 0.0f64);
        let mut fit_points = Vec::new();
        for &y in &nodes {
            let side = grid.side(y);
            let yn = neumann.index_of(y).expect("Neumann keeps every node");
            let yd = dirichlet
                .index_of(y)
                .ok_or_else(|| Error::Precondition("source snapped onto the hyperplane".into()))?;
            let kn = sn.kernel(yn, t)?;
            let kd = sd.kernel(yd, t)?;
            for (i, &x) in neumann.grid_nodes().iter().enumerate() {
                let s = grid.side(x) * side;
                if s < 0 {
                    cross_max = cross_max.max(kn.values[i]);
                    cross_min = cross_min.min(kn.values[i]);
                } else if s > 0 {
                    let j = dirichlet.index_of(x).expect("off-hyperplane node kept");
                    gap = gap.max((kn.values[i] - kd.values[j]).abs());
                }
            }
            if level + 1 == levels {
                let field = DistanceField::from_nodes(&coeffs, &grid, &[y], stencil_order)?;
                let (volume, _) = ball_volume(&field, t.sqrt())?;
                for (i, &x) in neumann.grid_nodes().iter().enumerate() {
                    let d = field.distance(x);
                    if d.is_finite() && kn.values[i] > 0.0 {
                        fit_points.push((d * d / t, (kn.values[i] * volume).ln(), x == y));
                    }
                }
            }
        }
        if !fit_points.is_empty() {
            let log_b = fit_points
                .iter()
                .filter(|p| p.2)
                .map(|p| p.1)
                .fold(f64::INFINITY, f64::min);
            let c = fit_points
                .iter()
                .filter(|p| p.0 > 0.0)
                .map(|p| (log_b - p.1) / p.0)
                .fold(0.0, f64::max);
            lower = (log_b.exp(), c);
        }
        out.push(SeparationLevel {
            counts: grid.counts().to_vec(),
            spacing: grid.spacing()[0],
            cross_max,
            cross_min: if cross_min.is_finite() { cross_min } else { 0.0 },
            gap,
            coupling: neumann.coupling_to_degeneracy_set(),
        });
    }
    Ok(SeparationReport {
        delta1: params.delta1,
        strongly_degenerate: params.delta1 >= 0.5,
        t,
        levels: out,
        lower_b: lower.0,
        lower_c: lower.1,
    })
}
