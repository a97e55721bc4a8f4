//! The heat semigroup `e^{-tL}` of an assembled operator, kernel slices and the
//! kernel estimates verified against them.
//!
//! The generator is the assembled matrix itself: node weights are uniform, so `A`
//! is self-adjoint for the weighted inner product. Kernels are normalised as
//! `K_t(x;y) = (e^{-tA} e_y)_x / w_y`.

mod checks;
mod methods;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checks::{
    conservation_report, gaussian_bounds, kernel_comparison, ondiagonal_decay, separation_check, ComparisonReport,
    ComparisonSample, ConservationReport, DecaySample, DecaySeries, GaussianReport, SeparationLevel, SeparationReport,
};

use crate::discretization::DivergenceFormOperator;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, SymmetricEigen};

/// Largest operator the dense eigendecomposition accepts by default.
pub const EXACT_LIMIT: usize = 4500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[serde(alias = "exact")]
    ExactEigendecomposition,
    #[serde(alias = "krylov")]
    KrylovExponential,
    /// Poisson-weighted powers of the non-negative matrix `I - A/q`.
    Uniformization,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionMethod {
    pub kind: MethodKind,
    /// Relative error target in the weighted 2-norm.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Capacity guard for the dense method; the Krylov basis size for Lanczos.
    #[serde(default = "default_max_dimension")]
    pub max_dimension: usize,
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_max_dimension() -> usize {
    EXACT_LIMIT
}

const KRYLOV_BASIS: usize = 48;

impl EvolutionMethod {
    pub fn exact() -> Self {
        Self {
            kind: MethodKind::ExactEigendecomposition,
            tolerance: 1e-12,
            max_dimension: EXACT_LIMIT,
        }
    }

    pub fn krylov(tolerance: f64) -> Self {
        Self {
            kind: MethodKind::KrylovExponential,
            tolerance,
            max_dimension: KRYLOV_BASIS,
        }
    }

    pub fn uniformization() -> Self {
        Self {
            kind: MethodKind::Uniformization,
            tolerance: 1e-32,
            max_dimension: usize::MAX,
        }
    }

    pub fn crank_nicolson(tolerance: f64) -> Self {
        Self {
            kind: MethodKind::CrankNicolson,
            tolerance,
            max_dimension: usize::MAX,
        }
    }

    /// Exact up to [`EXACT_LIMIT`] unknowns, Krylov with tolerance `1e-8` beyond.
    pub fn default_for(unknowns: usize) -> Self {
        if unknowns <= EXACT_LIMIT {
            Self::exact()
        } else {
            Self::krylov(1e-8)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::invalid(
                "method.tolerance",
                format!("must lie in (0,1), got {}", self.tolerance),
            ));
        }
        if self.kind == MethodKind::KrylovExponential && self.max_dimension < 2 {
            return Err(Error::invalid(
                "method.max_dimension",
                "Krylov basis needs at least 2 vectors",
            ));
        }
        Ok(())
    }
}

/// One column `K_t(·;y)` of the discrete heat kernel, indexed by operator unknowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSlice {
    pub source: usize,
    pub source_node: usize,
    pub t: f64,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KernelSlice {
    /// `Σ_x w_x K_t(x;y)`.
    pub fn mass(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(k, w)| k * w).sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn diagonal(&self) -> f64 {
        self.values[self.source]
    }
}

/// `e^{-tA}` for one operator, with whatever the method needs precomputed.
pub struct Semigroup<'a> {
    op: &'a DivergenceFormOperator,
    method: EvolutionMethod,
    eigen: Option<SymmetricEigen>,
}

impl<'a> Semigroup<'a> {
    pub fn new(op: &'a DivergenceFormOperator, method: EvolutionMethod) -> Result<Self> {
        method.validate()?;
        let eigen = if method.kind == MethodKind::ExactEigendecomposition {
            if op.len() > method.max_dimension {
                return Err(Error::Capacity {
                    method: "exact_eigendecomposition",
                    limit: method.max_dimension,
                    requested: op.len(),
                });
            }
            Some(SymmetricEigen::new(&op.matrix().to_dense())?)
        } else {
            None
        };
        Ok(Self { op, method, eigen })
    }

    pub fn operator(&self) -> &DivergenceFormOperator {
        self.op
    }

    pub fn method(&self) -> EvolutionMethod {
        self.method
    }

    pub fn eigen(&self) -> Option<&SymmetricEigen> {
        self.eigen.as_ref()
    }

    /// `e^{-tA} v`; `t = 0` returns `v` unchanged.
    pub fn apply(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.apply_times(v, &[t])?.pop().expect("one time requested"))
    }

    /// `e^{-t_k A} v` for non-decreasing times, each step continuing from the last.
    pub fn apply_times(&self, v: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
        if v.len() != self.op.len() {
            return Err(Error::Precondition(format!(
                "vector has {} entries, operator has {} unknowns",
                v.len(),
                self.op.len()
            )));
        }
        check_times(times)?;
        if let Some(eigen) = &self.eigen {
            let coeffs: Vec<f64> = (0..eigen.dim()).map(|k| dot(eigen.vector(k), v)).collect();
            return Ok(times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        return v.to_vec();
                    }
                    let mut out = vec![0.0; v.len()];
                    for (k, &c) in coeffs.iter().enumerate() {
                        let g = c * (-t * eigen.values[k]).exp();
                        if g != 0.0 {
                            axpy(g, eigen.vector(k), &mut out);
                        }
                    }
                    out
                })
                .collect());
        }
        let a = self.op.matrix();
        let mut out = Vec::with_capacity(times.len());
        let mut current = v.to_vec();
        let mut now = 0.0;
        for &t in times {
            let dt = t - now;
            if dt > 0.0 {
                current = match self.method.kind {
                    MethodKind::KrylovExponential => {
                        // error budget in proportion to the step, relative to |v|
                        let tol = self.method.tolerance * dt / times[times.len() - 1];
                        methods::lanczos_expm(a, &current, dt, tol, crate::linalg::norm2(v), self.method.max_dimension)?
                    }
                    MethodKind::Uniformization => methods::uniformization(a, &current, dt, self.method.tolerance),
                    MethodKind::CrankNicolson => methods::crank_nicolson(a, &current, dt, self.method.tolerance)?,
                    MethodKind::ExactEigendecomposition => unreachable!("handled above"),
                };
                now = t;
            }
            out.push(current.clone());
        }
        Ok(out)
    }

    /// `K_t(·;y)` for the operator unknown `y`.
    pub fn kernel(&self, y: usize, t: f64) -> Result<KernelSlice> {
        Ok(self.kernels(y, &[t])?.pop().expect("one time requested"))
    }

    pub fn kernels(&self, y: usize, times: &[f64]) -> Result<Vec<KernelSlice>> {
        if y >= self.op.len() {
            return Err(Error::Precondition(format!("source {y} is not an operator unknown")));
        }
        if times.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::invalid("times", "kernel times must be positive"));
        }
        let w = self.op.node_weight();
        let mut e = vec![0.0; self.op.len()];
        e[y] = 1.0;
        let columns = self.apply_times(&e, times)?;
        Ok(columns
            .into_iter()
            .zip(times)
            .map(|(mut values, &t)| {
                values.iter_mut().for_each(|v| *v /= w);
                KernelSlice {
                    source: y,
                    source_node: self.op.grid_node(y),
                    t,
                    values,
                    weights: self.op.weights().to_vec(),
                }
            })
            .collect())
    }

    /// Kernel columns for several sources, evaluated in parallel; result indexed
    /// `[source][time]`.
    pub fn kernel_table(&self, sources: &[usize], times: &[f64]) -> Result<Vec<Vec<KernelSlice>>> {
        sources.par_iter().map(|&y| self.kernels(y, times)).collect()
    }

    /// `K_t(x;x)` for each listed unknown; result indexed `[time][x]`.
    pub fn diagonal(&self, nodes: &[usize], times: &[f64]) -> Result<Vec<Vec<f64>>> {
        if let Some(eigen) = &self.eigen {
            check_times(times)?;
            let w = self.op.node_weight();
            return Ok(times
                .iter()
                .map(|&t| {
                    let decay: Vec<f64> = eigen.values.iter().map(|l| (-t * l).exp()).collect();
                    nodes
                        .iter()
                        .map(|&x| {
                            (0..eigen.dim())
                                .map(|k| decay[k] * eigen.vector(k)[x].powi(2))
                                .sum::<f64>()
                                / w
                        })
                        .collect()
                })
                .collect());
        }
        let table = self.kernel_table(nodes, times)?;
        Ok((0..times.len())
            .map(|ti| table.iter().map(|col| col[ti].diagonal()).collect())
            .collect())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("times", "at least one time is required"));
    }
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid("times", "times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times", "times must be non-decreasing"));
    }
    Ok(())
}
