use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::quadrature::{integrate_endpoint_singular, GaussRule};

const FACE_REL_TOL: f64 = 1e-12;

/// Which nodes are kept and how the hyperplane `x₁ = 0` is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// All nodes, no flux through the outer boundary.
    NeumannTruncation,
    /// Nodes on `{x₁ = 0}` are removed with a zero boundary value.
    DirichletOrigin,
    /// Nodes with first x₁ coordinate `≥ 0`, no flux across the cut.
    HalfLinePositive,
    /// Nodes with first x₁ coordinate `≤ 0`, no flux across the cut.
    HalfLineNegative,
}

/// Harmonic-mean conductance of the face leaving the node with x₁-coordinates
/// `x1_start` in the positive direction of `axis`, for grid spacing `h`:
/// `h⁻² [h⁻¹ ∫_segment c_axis⁻¹]⁻¹`.
///
/// Returns exactly `0.0` when the integral diverges, i.e. the segment meets
/// `x₁ = 0` along an x₁ axis with `2δ₁ ≥ 1`, or a block-2 coefficient vanishes.
pub fn face_conductance(coeffs: &CoefficientField, axis: usize, x1_start: &[f64], h: f64) -> f64 {
    let n = coeffs.params.n;
    debug_assert_eq!(x1_start.len(), n);
    if axis >= n {
        let r = x1_start.iter().map(|v| v * v).sum::<f64>().sqrt();
        return coeffs.block2(r) / (h * h);
    }
    let perp2: f64 = x1_start
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != axis)
        .map(|(_, v)| v * v)
        .sum();
    if coeffs.params.delta1 == 0.0 && coeffs.params.delta1p == 0.0 {
        return 1.0 / (h * h);
    }
    let a = x1_start[axis];
    let b = a + h;
    let rule = GaussRule::new(3);
    let inv = |r: f64| 1.0 / coeffs.block1(r);
    let exponent = 2.0 * coeffs.local_exponent(axis);
    let meets_origin = perp2 == 0.0 && a <= 1e-9 * h && b >= -1e-9 * h;
    let integral = if meets_origin && exponent > 0.0 {
        integrate_endpoint_singular(&rule, inv, a.abs(), exponent, FACE_REL_TOL)
            + integrate_endpoint_singular(&rule, inv, b.abs(), exponent, FACE_REL_TOL)
    } else {
        rule.integrate_adaptive_rel(|s| inv((s * s + perp2).sqrt()), a, b, FACE_REL_TOL)
    };
    if !integral.is_finite() || integral <= 0.0 {
        return 0.0;
    }
    1.0 / (h * integral)
}

/// Discrete Dirichlet form `A = Σ_faces g_f (e_i - e_j)(e_i - e_j)ᵀ` restricted
/// to the kept nodes, with node measures.
///
/// The form is `w·uᵀAu` with the uniform cell measure `w`, so `A` is also the
/// generator of the semigroup on the weighted space.
#[derive(Debug, Clone)]
pub struct DivergenceFormOperator {
    matrix: CsrMatrix,
    weights: Vec<f64>,
    boundary: Boundary,
    nodes: Vec<usize>,
    grid_to_op: Vec<Option<usize>>,
    grid: Grid,
    coeffs: CoefficientField,
}

impl DivergenceFormOperator {
    pub fn assemble(grid: &Grid, coeffs: &CoefficientField, boundary: Boundary) -> Result<Self> {
        if grid.dim() != coeffs.params.dim() || grid.block1_dims() != coeffs.params.n {
            return Err(Error::Precondition(format!(
                "grid has {} axes ({} in x₁), coefficients expect n={} m={}",
                grid.dim(),
                grid.block1_dims(),
                coeffs.params.n,
                coeffs.params.m
            )));
        }
        let dim = grid.dim();
        let n = grid.block1_dims();
        let h = grid.spacing();

        // Conductances depend on the x₁ position of the lower node and the axis only.
        let block1_len = grid.block1_len();
        let block1_counts = &grid.counts()[..n];
        let conductance: Vec<f64> = (0..block1_len * dim)
            .into_par_iter()
            .map(|k| {
                let (b1, axis) = (k / dim, k % dim);
                let mut rest = b1;
                let mut x1 = vec![0.0; n];
                for ax in (0..n).rev() {
                    x1[ax] = grid.coordinate(ax, rest % block1_counts[ax]);
                    rest /= block1_counts[ax];
                }
                face_conductance(coeffs, axis, &x1, h[axis])
            })
            .collect();

        let keep = |node: usize| match boundary {
            Boundary::NeumannTruncation => true,
            Boundary::DirichletOrigin => !grid.on_degeneracy_set(node),
            Boundary::HalfLinePositive => grid.side(node) >= 0,
            Boundary::HalfLineNegative => grid.side(node) <= 0,
        };
        let nodes: Vec<usize> = (0..grid.len()).filter(|&node| keep(node)).collect();
        let mut grid_to_op = vec![None; grid.len()];
        for (i, &node) in nodes.iter().enumerate() {
            grid_to_op[node] = Some(i);
        }
        let dirichlet = boundary == Boundary::DirichletOrigin;

        let rows: Vec<Vec<(usize, f64)>> = nodes
            .par_iter()
            .map(|&node| {
                let mut row = Vec::with_capacity(2 * dim + 1);
                let mut diag = 0.0;
                let b1 = grid.block1_index(node);
                for axis in 0..dim {
                    let i = grid.axis_index(node, axis);
                    let stride = grid.stride(axis);
                    let mut visit = |neighbour: usize, lower: usize| {
                        let lower_b1 = if axis < n { grid.block1_index(lower) } else { b1 };
                        let g = conductance[lower_b1 * dim + axis];
                        match grid_to_op[neighbour] {
                            Some(j) => {
                                if g != 0.0 {
                                    row.push((j, -g));
                                }
                                diag += g;
                            }
                            None if dirichlet => diag += g,
                            None => {}
                        }
                    };
                    if i > 0 {
                        visit(node - stride, node - stride);
                    }
                    if i + 1 < grid.counts()[axis] {
                        visit(node + stride, node);
                    }
                }
                row.push((grid_to_op[node].expect("kept node"), diag));
                row
            })
            .collect();

        let matrix = CsrMatrix::from_rows(rows);
        let weights = vec![grid.node_weight(); nodes.len()];
        Ok(Self {
            matrix,
            weights,
            boundary,
            nodes,
            grid_to_op,
            grid: grid.clone(),
            coeffs: *coeffs,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node_weight(&self) -> f64 {
        self.grid.node_weight()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &CoefficientField {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Grid node of an operator unknown.
    pub fn grid_node(&self, index: usize) -> usize {
        self.nodes[index]
    }

    pub fn grid_nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Operator unknown of a grid node, if the node is kept.
    pub fn index_of(&self, node: usize) -> Option<usize> {
        self.grid_to_op[node]
    }

    /// `w·uᵀAu`, the discrete analogue of `∫ c|∇u|²`.
    pub fn form_value(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.len() {
            return Err(Error::Precondition(format!(
                "vector has {} entries, operator has {} unknowns",
                u.len(),
                self.len()
            )));
        }
        Ok(self.node_weight() * self.matrix.quadratic_form(u))
    }

    /// Samples a function of the grid coordinates on the kept nodes.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&node| f(&self.grid.coords(node))).collect()
    }

    /// Sum of `|A_ij|` over pairs on opposite sides of `x₁ = 0` (first x₁ axis).
    pub fn coupling_across_origin(&self) -> f64 {
        (0..self.len())
            .flat_map(|i| self.matrix.row(i).map(move |(j, v)| (i, j, v)))
            .filter(|&(i, j, _)| self.grid.side(self.nodes[i]) * self.grid.side(self.nodes[j]) < 0)
            .map(|(_, _, v)| v.abs())
            .sum()
    }

    /// Sum of `|A_ij|` between nodes on `{x₁ = 0}` and nodes off it.
    pub fn coupling_to_degeneracy_set(&self) -> f64 {
        (0..self.len())
            .flat_map(|i| self.matrix.row(i).map(move |(j, v)| (i, j, v)))
            .filter(|&(i, j, _)| {
                self.grid.on_degeneracy_set(self.nodes[i]) != self.grid.on_degeneracy_set(self.nodes[j])
            })
            .map(|(_, _, v)| v.abs())
            .sum()
    }
}
