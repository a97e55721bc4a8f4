use serde::{Deserialize, Serialize};

use crate::coefficients::GrusinParameters;
use crate::error::{Error, Result};

/// Uniform tensor grid on `Π [-L_k, L_k]` with an odd node count per axis, so the
/// origin is always a node. Axes `0..n` carry x₁, the remaining axes x₂.
/// Nodes are numbered row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    counts: Vec<usize>,
    extents: Vec<f64>,
    spacing: Vec<f64>,
    block1_dims: usize,
    strides: Vec<usize>,
}

impl Grid {
    pub fn build(params: &GrusinParameters, extents: &[f64], counts: &[usize]) -> Result<Self> {
        let dim = params.dim();
        let extents = broadcast("grid.extent", extents, dim)?;
        let counts = broadcast("grid.nodes", counts, dim)?;
        for (axis, (&l, &c)) in extents.iter().zip(&counts).enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::invalid(
                    format!("grid.extent[{axis}]"),
                    format!("extent must be positive, got {l}"),
                ));
            }
            if c < 3 || c % 2 == 0 {
                return Err(Error::invalid(
                    format!("grid.nodes[{axis}]"),
                    format!("node count must be odd and at least 3 so that 0 is a node, got {c}"),
                ));
            }
        }
        let spacing = extents
            .iter()
            .zip(&counts)
            .map(|(&l, &c)| 2.0 * l / (c - 1) as f64)
            .collect();
        let mut strides = vec![1; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        Ok(Self {
            counts,
            extents,
            spacing,
            block1_dims: params.n,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn block1_dims(&self) -> usize {
        self.block1_dims
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell measure `Π h_k`, the same for every node.
    pub fn node_weight(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Signed integer offset of axis index `i` from the centre node.
    #[inline]
    pub fn centred(&self, axis: usize, i: usize) -> i64 {
        i as i64 - ((self.counts[axis] - 1) / 2) as i64
    }

    #[inline]
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.centred(axis, i) as f64 * self.spacing[axis]
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut rest = node;
        self.strides
            .iter()
            .map(|&s| {
                let i = rest / s;
                rest %= s;
                i
            })
            .collect()
    }

    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.counts[axis]
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Node index for signed offsets from the centre, if inside the grid.
    pub fn index_centred(&self, offsets: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for (axis, &o) in offsets.iter().enumerate() {
            let i = o + ((self.counts[axis] - 1) / 2) as i64;
            if i < 0 || i >= self.counts[axis] as i64 {
                return None;
            }
            idx += i as usize * self.strides[axis];
        }
        Some(idx)
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|axis| self.coordinate(axis, self.axis_index(node, axis)))
            .collect()
    }

    /// `|x₁|` at a node.
    pub fn x1_norm(&self, node: usize) -> f64 {
        (0..self.block1_dims)
            .map(|axis| self.coordinate(axis, self.axis_index(node, axis)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Whether every x₁ coordinate of the node vanishes.
    pub fn on_degeneracy_set(&self, node: usize) -> bool {
        (0..self.block1_dims).all(|axis| self.centred(axis, self.axis_index(node, axis)) == 0)
    }

    /// Sign of the first x₁ coordinate: -1, 0 or 1.
    pub fn side(&self, node: usize) -> i64 {
        self.centred(0, self.axis_index(node, 0)).signum()
    }

    /// Number of distinct x₁ positions; coefficients depend on x₁ only.
    pub fn block1_len(&self) -> usize {
        self.counts[..self.block1_dims].iter().product()
    }

    /// Linear index of the node's x₁ position within the x₁ sub-grid.
    pub fn block1_index(&self, node: usize) -> usize {
        let mut idx = 0;
        for axis in 0..self.block1_dims {
            idx = idx * self.counts[axis] + self.axis_index(node, axis);
        }
        idx
    }

    /// Nearest node to a point and the Euclidean snap distance.
    pub fn nearest_node(&self, point: &[f64]) -> Result<(usize, f64)> {
        if point.len() != self.dim() {
            return Err(Error::Precondition(format!(
                "point has {} coordinates, grid has {} axes",
                point.len(),
                self.dim()
            )));
        }
        let mut multi = Vec::with_capacity(self.dim());
        let mut snap = 0.0;
        for (axis, &x) in point.iter().enumerate() {
            if x.abs() > self.extents[axis] * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!(
                    "coordinate {x} on axis {axis} lies outside [-{0}, {0}]",
                    self.extents[axis]
                )));
            }
            let i = ((x + self.extents[axis]) / self.spacing[axis]).round() as usize;
            let i = i.min(self.counts[axis] - 1);
            snap += (self.coordinate(axis, i) - x).powi(2);
            multi.push(i);
        }
        Ok((self.index(&multi), snap.sqrt()))
    }

    /// Nodes on the outer boundary of the box.
    pub fn is_boundary(&self, node: usize) -> bool {
        (0..self.dim()).any(|axis| {
            let i = self.axis_index(node, axis);
            i == 0 || i + 1 == self.counts[axis]
        })
    }

    /// Grid with every spacing halved over the same box.
    pub fn refined(&self) -> Self {
        let counts: Vec<usize> = self.counts.iter().map(|&c| 2 * c - 1).collect();
        let spacing = self.spacing.iter().map(|h| 0.5 * h).collect();
        let mut strides = vec![1; counts.len()];
        for k in (0..counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        Self {
            counts,
            extents: self.extents.clone(),
            spacing,
            block1_dims: self.block1_dims,
            strides,
        }
    }
}

fn broadcast<T: Copy>(field: &str, values: &[T], dim: usize) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        l if l == dim => Ok(values.to_vec()),
        l => Err(Error::invalid(field, format!("expected 1 or {dim} values, got {l}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_line() {
        let g = Grid::build(&GrusinParameters::one_dimensional(0.0, 0.0), &[1.0], &[3]).unwrap();
        assert_eq!(g.spacing(), &[1.0]);
        assert_eq!((0..3).map(|i| g.coords(i)[0]).collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(g.node_weight(), 1.0);
    }

    #[test]
    fn classical_grid_size() {
        let g = Grid::build(&GrusinParameters::classical(), &[8.0], &[257]).unwrap();
        assert_eq!(g.spacing(), &[1.0 / 16.0, 1.0 / 16.0]);
        assert_eq!(g.len(), 66049);
        let (origin, snap) = g.nearest_node(&[0.0, 0.0]).unwrap();
        assert_eq!(snap, 0.0);
        assert_eq!(g.coords(origin), vec![0.0, 0.0]);
        assert!(g.on_degeneracy_set(origin));
        assert_eq!(g.index_centred(&[0, 0]), Some(origin));
    }

    #[test]
    fn even_counts_are_rejected() {
        let err = Grid::build(&GrusinParameters::classical(), &[1.0], &[4]).unwrap_err();
        assert!(err.to_string().contains("odd"));
        assert!(Grid::build(&GrusinParameters::classical(), &[1.0, 2.0, 3.0], &[5]).is_err());
    }

    #[test]
    fn index_round_trip_and_refinement() {
        let g = Grid::build(&GrusinParameters::classical(), &[2.0, 3.0], &[5, 7]).unwrap();
        for node in 0..g.len() {
            assert_eq!(g.index(&g.multi_index(node)), node);
        }
        let (node, snap) = g.nearest_node(&[0.9, -1.1]).unwrap();
        assert_eq!(g.coords(node), vec![1.0, -1.0]);
        assert!((snap - (0.01f64 + 0.01).sqrt()).abs() < 1e-12);
        let fine = g.refined();
        assert_eq!(fine.counts(), &[9, 13]);
        assert_eq!(fine.spacing(), &[0.5, 0.5]);
    }
}
