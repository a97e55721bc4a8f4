use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{vf_volume, MultiplierSpec};
use crate::discretization::{Boundary, DivergenceFormOperator, Grid};
use crate::error::{Error, Result};
use crate::fit::geometric_grid;

/// Ensemble and radius grid for [`nash_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashConfig {
    pub ensemble: usize,
    /// Bump half-widths are drawn log-uniformly from this range, per axis.
    pub width_range: (f64, f64),
    pub radii: (f64, f64, usize),
    pub seed: u64,
    /// Minimum number of grid spacings across the narrowest half-width.
    pub min_cells: f64,
}

impl Default for NashConfig {
    fn default() -> Self {
        Self {
            ensemble: 200,
            width_range: (0.3, 2.0),
            radii: (1e-2, 1e3, 41),
            seed: 0,
            min_cells: 6.0,
        }
    }
}

/// Worst case over the ensemble at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashRow {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs)/lhs`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    /// `h(φ)/f(φ)` per ensemble member, `f` with the multiplier's scale.
    pub ratios: Vec<f64>,
    /// Minimum ratio times the multiplier's scale: the fitted `a` with `h ≥ a F` on the ensemble.
    pub fitted_constant: f64,
    pub rows: Vec<NashRow>,
    pub min_margin: f64,
    /// 4 on the half-line (even reflection), 1 otherwise.
    pub reflection_factor: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct Bump {
    centre: [f64; 4],
    width: [f64; 4],
    amplitude: f64,
}

impl Bump {
    fn value(&self, x: &[f64]) -> f64 {
        let q: f64 = x
            .iter()
            .enumerate()
            .map(|(k, &xk)| ((xk - self.centre[k]) / self.width[k]).powi(2))
            .sum();
        if q >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - q).powi(4)
        }
    }
}

struct Trial {
    h: f64,
    f: f64,
    l1: f64,
    l2sq: f64,
}

/// Nash display `‖φ‖₂² ≤ r⁻²h(φ) + c(2π)^{-d} V_F(r)‖φ‖₁²` on random compactly
/// supported bumps, with `F` rescaled to the fitted domination constant.
///
/// `h` is the discrete form of `op`; `f(φ) = Σ F(p)|φ̂(p)|²` comes from the FFT of
/// the grid samples on the periodic box. On a [`Boundary::HalfLinePositive`]
/// operator (n = 1) the even reflection is transformed and `c = 4`.
pub fn nash_check(op: &DivergenceFormOperator, spec: &MultiplierSpec, config: &NashConfig) -> Result<NashReport> {
    spec.validate()?;
    let grid = op.grid();
    let dim = grid.dim();
    if spec.params != op.coefficients().params {
        return Err(Error::Precondition(
            "multiplier and operator have different parameters".into(),
        ));
    }
    if dim > 4 {
        return Err(Error::Precondition("at most four dimensions are supported".into()));
    }
    let half_line = match op.boundary() {
        Boundary::NeumannTruncation => false,
        Boundary::HalfLinePositive if spec.params.n == 1 => true,
        other => {
            return Err(Error::Precondition(format!("nash check is not defined for {other:?}")));
        }
    };
    let (w_lo, w_hi) = config.width_range;
    if !(w_lo > 0.0 && w_hi >= w_lo) {
        return Err(Error::invalid("nash.width_range", "need 0 < min ≤ max"));
    }
    if config.ensemble == 0 {
        return Err(Error::invalid("nash.ensemble", "ensemble must be non-empty"));
    }
    let coarsest = grid.max_spacing();
    if w_lo < config.min_cells * coarsest * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "resolution too coarse: narrowest half-width {w_lo} spans fewer than {} cells of size {coarsest}",
            config.min_cells
        )));
    }
    for (k, &l) in grid.extents().iter().enumerate() {
        if 2.0 * w_hi > 0.9 * l {
            return Err(Error::Precondition(format!(
                "box extent {l} on axis {k} is too small for half-width {w_hi}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bumps: Vec<Bump> = (0..config.ensemble)
        .map(|_| {
            let mut b = Bump {
                centre: [0.0; 4],
                width: [1.0; 4],
                amplitude: rng.gen_range(0.5..2.0),
            };
            for k in 0..dim {
                let w = (rng.gen_range(w_lo.ln()..=w_hi.ln())).exp();
                let room = 0.9 * grid.extents()[k] - w;
                b.width[k] = w;
                b.centre[k] = if half_line && k == 0 {
                    rng.gen_range(0.0..=room)
                } else {
                    rng.gen_range(-room..=room)
                };
            }
            b
        })
        .collect();

    let transform = Transform::new(grid, spec);
    let trials: Vec<Trial> = bumps
        .par_iter()
        .map(|b| evaluate(op, grid, &transform, b, half_line))
        .collect::<Result<_>>()?;

    let ratios: Vec<f64> = trials.iter().map(|t| t.h / t.f).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_ratio > 0.0) || !min_ratio.is_finite() {
        return Err(Error::Numerical(format!(
            "fitted domination constant {min_ratio} is not positive"
        )));
    }
    let fitted = spec.with_scale(spec.scale * min_ratio);
    let factor = if half_line { 4.0 } else { 1.0 };
    let d = dim as f64;
    let (r_lo, r_hi, count) = config.radii;
    let mut rows = Vec::with_capacity(count);
    for r in geometric_grid(r_lo, r_hi, count) {
        let volume = vf_volume(&fitted, r)?;
        let worst = trials
            .iter()
            .map(|t| {
                let rhs = t.h / (r * r) + factor * (2.0 * std::f64::consts::PI).powf(-d) * volume * t.l1 * t.l1;
                NashRow {
                    r,
                    lhs: t.l2sq,
                    rhs,
                    margin: (rhs - t.l2sq) / t.l2sq,
                }
            })
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("non-empty ensemble");
        rows.push(worst);
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(NashReport {
        ratios,
        fitted_constant: fitted.scale,
        rows,
        min_margin,
        reflection_factor: factor,
        seed: config.seed,
    })
}

/// `F(p)` on the FFT frequency lattice of the grid, flattened row-major.
struct Transform {
    counts: Vec<usize>,
    symbol: Vec<f64>,
    /// `h^d / N^d`, converting `Σ|DFT|²` into `∫|φ̂|²`.
    scale: f64,
}

impl Transform {
    fn new(grid: &Grid, spec: &MultiplierSpec) -> Self {
        let counts = grid.counts().to_vec();
        let dim = counts.len();
        let freqs: Vec<Vec<f64>> = counts
            .iter()
            .zip(grid.spacing())
            .map(|(&n, &h)| {
                (0..n)
                    .map(|j| {
                        let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                        2.0 * std::f64::consts::PI * k / (n as f64 * h)
                    })
                    .collect()
            })
            .collect();
        let total = grid.len();
        let symbol = (0..total)
            .map(|idx| {
                let multi = grid.multi_index(idx);
                let p: Vec<f64> = (0..dim).map(|k| freqs[k][multi[k]]).collect();
                super::multiplier_value(spec, &p).expect("dimension checked")
            })
            .collect();
        Self {
            counts,
            symbol,
            scale: grid.node_weight() / total as f64,
        }
    }

    /// `Σ F(p)|φ̂(p)|² Δp^d` for grid samples `values`.
    fn form(&self, values: &[f64]) -> f64 {
        let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft_nd(&mut data, &self.counts);
        self.scale
            * data
                .iter()
                .zip(&self.symbol)
                .map(|(c, f)| f * c.norm_sqr())
                .sum::<f64>()
    }
}

fn fft_nd(data: &mut [Complex<f64>], counts: &[usize]) {
    let mut planner = FftPlanner::new();
    let total = data.len();
    let mut stride = total;
    for &n in counts {
        stride /= n;
        let fft = planner.plan_fft_forward(n);
        let mut line = vec![Complex::new(0.0, 0.0); n];
        let block = n * stride;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                for j in 0..n {
                    line[j] = data[start + offset + j * stride];
                }
                fft.process(&mut line);
                for j in 0..n {
                    data[start + offset + j * stride] = line[j];
                }
            }
        }
    }
}

fn evaluate(
    op: &DivergenceFormOperator,
    grid: &Grid,
    transform: &Transform,
    bump: &Bump,
    half_line: bool,
) -> Result<Trial> {
    let w = grid.node_weight();
    let sample = |node: usize| {
        let mut x = grid.coords(node);
        if half_line {
            x[0] = x[0].abs();
        }
        bump.value(&x)
    };
    let full: Vec<f64> = (0..grid.len()).map(sample).collect();
    let restricted: Vec<f64> = op.grid_nodes().iter().map(|&node| full[node]).collect();
    let h = op.form_value(&restricted)?;
    let mut f = transform.form(&full);
    let (mut l1, mut l2sq) = (0.0, 0.0);
    for &x in &full {
        l1 += w * x.abs();
        l2sq += w * x * x;
    }
    if half_line {
        // the reflected function carries each half-line integral twice
        f *= 0.5;
        l1 *= 0.5;
        l2sq *= 0.5;
    }
    Ok(Trial { h, f, l1, l2sq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientField, GrusinParameters};

    fn operator(params: GrusinParameters, extent: f64, nodes: usize, boundary: Boundary) -> DivergenceFormOperator {
        let grid = Grid::build(&params, &[extent], &[nodes]).unwrap();
        DivergenceFormOperator::assemble(&grid, &CoefficientField::new(params), boundary).unwrap()
    }

    #[test]
    fn flat_form_matches_parseval() {
        let params = GrusinParameters::euclidean(1, 1);
        let op = operator(params, 6.0, 129, Boundary::NeumannTruncation);
        let spec = MultiplierSpec::new(params, 1.0).unwrap();
        let config = NashConfig {
            ensemble: 12,
            width_range: (0.8, 2.0),
            ..NashConfig::default()
        };
        let report = nash_check(&op, &spec, &config).unwrap();
        for r in &report.ratios {
            assert!((r - 1.0).abs() < 0.02, "ratio {r}");
        }
        assert!(report.min_margin >= 0.0);
        assert_eq!(report.reflection_factor, 1.0);
    }

    #[test]
    fn fft_of_a_mode() {
        let counts = [4, 3];
        let mut data: Vec<Complex<f64>> = (0..12)
            .map(|i| {
                let (a, b) = (i / 3, i % 3);
                let phase = 2.0 * std::f64::consts::PI * (a as f64 / 4.0 + 2.0 * b as f64 / 3.0);
                Complex::new(phase.cos(), phase.sin())
            })
            .collect();
        fft_nd(&mut data, &counts);
        for (i, c) in data.iter().enumerate() {
            let expected = if i == 3 + 2 { 12.0 } else { 0.0 };
            assert!((c.norm() - expected).abs() < 1e-12, "{i}: {c}");
        }
    }

    #[test]
    fn coarse_resolution_and_small_box_are_rejected() {
        let params = GrusinParameters::classical();
        let op = operator(params, 4.0, 17, Boundary::NeumannTruncation);
        let spec = MultiplierSpec::new(params, 1.0).unwrap();
        let config = NashConfig {
            width_range: (0.3, 1.0),
            ..NashConfig::default()
        };
        assert!(matches!(nash_check(&op, &spec, &config), Err(Error::Precondition(_))));
        let wide = NashConfig {
            width_range: (3.0, 3.0),
            ..NashConfig::default()
        };
        let fine = operator(params, 4.0, 129, Boundary::NeumannTruncation);
        assert!(nash_check(&fine, &spec, &wide).is_err());
    }

    #[test]
    fn half_line_uses_the_reflection_factor() {
        let params = GrusinParameters::one_dimensional(0.75, 0.75);
        let op = operator(params, 8.0, 2049, Boundary::HalfLinePositive);
        let spec = MultiplierSpec::new(params, 1.0).unwrap();
        let config = NashConfig {
            ensemble: 40,
            width_range: (0.1, 1.5),
            ..NashConfig::default()
        };
        let report = nash_check(&op, &spec, &config).unwrap();
        assert_eq!(report.reflection_factor, 4.0);
        assert!(report.fitted_constant > 0.0 && report.min_margin >= 0.0);
    }
}
