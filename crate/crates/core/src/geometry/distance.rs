use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::coefficients::CoefficientField;
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_endpoint_singular, GaussRule};

const EDGE_REL_TOL: f64 = 1e-10;

/// Integer offsets `o ≠ 0` with `max|o_k| ≤ order` and `gcd(|o_k|) = 1`.
///
/// In two dimensions order 1 gives the 8-neighbourhood and order 2 the 16-neighbourhood.
pub fn stencil_offsets(dim: usize, order: usize) -> Vec<Vec<i64>> {
    let order = order as i64;
    let side = (2 * order + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut rest = code;
        let offset: Vec<i64> = (0..dim)
            .map(|_| {
                let v = (rest % side) as i64 - order;
                rest /= side;
                v
            })
            .collect();
        let g = offset.iter().fold(0, |acc, &v| gcd(acc, v.unsigned_abs()));
        if g == 1 {
            out.push(offset);
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Length of the straight segment from x₁-position `start` with x₁-displacement
/// `step1` and x₂-displacement of Euclidean length `step2`, under the metric
/// `ds² = |dx₁|²/c_{δ₁,δ₁'}(x₁) + |dx₂|²/c_{δ₂,δ₂'}(x₁)`.
///
/// `start_idx` and `step_idx` are the same quantities in grid units; they decide
/// exactly whether the segment passes through `x₁ = 0`. A segment through the
/// origin is split there and each half integrated with the power-law substitution.
/// Returns `+∞` when the length diverges.
pub fn segment_length(
    coeffs: &CoefficientField,
    start: &[f64],
    step1: &[f64],
    step2: f64,
    start_idx: &[i64],
    step_idx: &[i64],
) -> f64 {
    let n = start.len();
    let step1_sq: f64 = step1.iter().map(|v| v * v).sum();
    let step2_sq = step2 * step2;
    let radius = |s: f64| (0..n).map(|k| (start[k] + s * step1[k]).powi(2)).sum::<f64>().sqrt();
    let integrand = |r: f64| {
        let mut acc = 0.0;
        if step1_sq > 0.0 {
            acc += step1_sq / coeffs.block1(r);
        }
        if step2_sq > 0.0 {
            acc += step2_sq / coeffs.block2(r);
        }
        acc.sqrt()
    };
    let rule = GaussRule::new(3);
    let Some(s0) = origin_crossing(start_idx, step_idx) else {
        return rule.integrate_adaptive_rel(|s| integrand(radius(s)), 0.0, 1.0, EDGE_REL_TOL);
    };
    // Leading singular exponent of the integrand at the crossing.
    let mut p: f64 = 0.0;
    if step1_sq > 0.0 {
        p = p.max(coeffs.local_exponent(0));
    }
    if step2_sq > 0.0 {
        p = p.max(coeffs.local_exponent(n));
    }
    if step1_sq == 0.0 {
        // The whole segment lies in {x₁ = 0}.
        let c = coeffs.block2(0.0);
        return if c > 0.0 { (step2_sq / c).sqrt() } else { f64::INFINITY };
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let speed = step1_sq.sqrt();
    let half = |len: f64| integrate_endpoint_singular(&rule, |u| integrand(u * speed), len, p, EDGE_REL_TOL);
    half(s0) + half(1.0 - s0)
}

/// Parameter `s ∈ [0,1]` where `start + s·step` vanishes, in exact integer arithmetic.
fn origin_crossing(start: &[i64], step: &[i64]) -> Option<f64> {
    if start.iter().all(|&a| a == 0) {
        return Some(0.0);
    }
    let k = step.iter().position(|&o| o != 0)?;
    let (a, o) = (start[k], step[k]);
    // s = -a/o must lie in [0, 1]
    if a * o > 0 || a.abs() > o.abs() {
        return None;
    }
    let collinear = (0..start.len()).all(|j| start[j] * o == step[j] * a);
    collinear.then(|| -(a as f64) / (o as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-node shortest-path distance from a source set under the control metric.
#[derive(Debug, Clone)]
pub struct DistanceField {
    grid: Grid,
    sources: Vec<usize>,
    snap_error: f64,
    distances: Vec<f64>,
    stencil_order: usize,
}

impl DistanceField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Euclidean distance between the requested source point and its node.
    pub fn snap_error(&self) -> f64 {
        self.snap_error
    }

    pub fn stencil_order(&self) -> usize {
        self.stencil_order
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn distance(&self, node: usize) -> f64 {
        self.distances[node]
    }

    pub fn unreachable(&self) -> usize {
        self.distances.iter().filter(|d| d.is_infinite()).count()
    }

    /// `inf` of the field over a node set: the set-to-set distance when the field
    /// was seeded from the other set.
    pub fn min_over(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&n| self.distances[n]).fold(f64::INFINITY, f64::min)
    }

    /// Distance from the sources to the outer boundary of the grid box.
    pub fn boundary_distance(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&n| self.grid.is_boundary(n))
            .map(|n| self.distances[n])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Dijkstra search from `source` (snapped to the nearest node) on the grid graph
/// whose edges are the stencil offsets of the given order, weighted by
/// [`segment_length`].
pub fn numerical_distance(
    coeffs: &CoefficientField,
    grid: &Grid,
    source: &[f64],
    stencil_order: usize,
) -> Result<DistanceField> {
    let (node, snap) = grid.nearest_node(source)?;
    let mut field = DistanceField::from_nodes(coeffs, grid, &[node], stencil_order)?;
    field.snap_error = snap;
    Ok(field)
}

impl DistanceField {
    /// Multi-source search; every node of `sources` starts at distance 0.
    pub fn from_nodes(coeffs: &CoefficientField, grid: &Grid, sources: &[usize], stencil_order: usize) -> Result<Self> {
        if stencil_order == 0 {
            return Err(Error::invalid("stencil_order", "must be at least 1"));
        }
        if grid.dim() != coeffs.params.dim() {
            return Err(Error::Precondition(
                "grid and coefficients disagree on dimension".into(),
            ));
        }
        if sources.is_empty() || sources.iter().any(|&s| s >= grid.len()) {
            return Err(Error::Precondition(
                "source set must be non-empty and on the grid".into(),
            ));
        }
        let weights = EdgeWeights::new(coeffs, grid, stencil_order);
        let mut distances = vec![f64::INFINITY; grid.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            distances[s] = 0.0;
            heap.push(Entry { dist: 0.0, node: s });
        }
        let dim = grid.dim();
        let mut multi = vec![0usize; dim];
        while let Some(Entry { dist, node }) = heap.pop() {
            if dist > distances[node] {
                continue;
            }
            for (axis, slot) in multi.iter_mut().enumerate() {
                *slot = grid.axis_index(node, axis);
            }
            let b1 = grid.block1_index(node);
            for (k, offset) in weights.offsets.iter().enumerate() {
                let inside = offset.iter().enumerate().all(|(axis, &o)| {
                    let i = multi[axis] as i64 + o;
                    i >= 0 && i < grid.counts()[axis] as i64
                });
                if !inside {
                    continue;
                }
                let w = weights.get(b1, k);
                if !w.is_finite() {
                    continue;
                }
                let next = (node as i64 + weights.linear[k]) as usize;
                let candidate = dist + w;
                if candidate < distances[next] {
                    distances[next] = candidate;
                    heap.push(Entry {
                        dist: candidate,
                        node: next,
                    });
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            sources: sources.to_vec(),
            snap_error: 0.0,
            distances,
            stencil_order,
        })
    }
}

/// Edge weights cached by (x₁ position, offset): the metric does not depend on x₂.
struct EdgeWeights {
    offsets: Vec<Vec<i64>>,
    linear: Vec<i64>,
    table: Vec<f64>,
}

impl EdgeWeights {
    fn new(coeffs: &CoefficientField, grid: &Grid, order: usize) -> Self {
        let dim = grid.dim();
        let n = grid.block1_dims();
        let offsets = stencil_offsets(dim, order);
        let linear = offsets
            .iter()
            .map(|o| o.iter().enumerate().map(|(a, &v)| v * grid.stride(a) as i64).sum())
            .collect();
        let h = grid.spacing();
        let counts = grid.counts();
        let block1_len = grid.block1_len();
        let mut table = vec![f64::NAN; block1_len * offsets.len()];
        for b1 in 0..block1_len {
            let mut rest = b1;
            let mut idx = vec![0usize; n];
            for a in (0..n).rev() {
                idx[a] = rest % counts[a];
                rest /= counts[a];
            }
            let start_idx: Vec<i64> = (0..n).map(|a| grid.centred(a, idx[a])).collect();
            let start: Vec<f64> = (0..n).map(|a| grid.coordinate(a, idx[a])).collect();
            for (k, o) in offsets.iter().enumerate() {
                let valid = (0..n).all(|a| {
                    let i = idx[a] as i64 + o[a];
                    i >= 0 && i < counts[a] as i64
                });
                if !valid {
                    continue;
                }
                let step1: Vec<f64> = (0..n).map(|a| o[a] as f64 * h[a]).collect();
                let step2 = (n..dim).map(|a| (o[a] as f64 * h[a]).powi(2)).sum::<f64>().sqrt();
                table[b1 * offsets.len() + k] = segment_length(coeffs, &start, &step1, step2, &start_idx, &o[..n]);
            }
        }
        Self { offsets, linear, table }
    }

    #[inline]
    fn get(&self, b1: usize, k: usize) -> f64 {
        self.table[b1 * self.offsets.len() + k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::GrusinParameters;
    use crate::quadrature::GaussRule;

    #[test]
    fn stencil_sizes() {
        assert_eq!(stencil_offsets(2, 1).len(), 8);
        assert_eq!(stencil_offsets(2, 2).len(), 16);
        assert_eq!(stencil_offsets(1, 3).len(), 2);
        assert_eq!(stencil_offsets(3, 1).len(), 26);
        assert!(stencil_offsets(2, 2).contains(&vec![1, 2]));
        assert!(!stencil_offsets(2, 2).contains(&vec![2, 2]));
    }

    #[test]
    fn crossing_detection() {
        assert_eq!(origin_crossing(&[0], &[3]), Some(0.0));
        assert_eq!(origin_crossing(&[-1], &[2]), Some(0.5));
        assert_eq!(origin_crossing(&[-2], &[2]), Some(1.0));
        assert_eq!(origin_crossing(&[1], &[2]), None);
        assert_eq!(origin_crossing(&[-3], &[2]), None);
        assert_eq!(origin_crossing(&[-1, -1], &[2, 2]), Some(0.5));
        assert_eq!(origin_crossing(&[-1, 0], &[2, 1]), None);
    }

    #[test]
    fn source_is_zero_and_flat_metric_is_near_euclidean() {
        let params = GrusinParameters::euclidean(1, 1);
        let grid = Grid::build(&params, &[4.0], &[81]).unwrap();
        let field = numerical_distance(&CoefficientField::new(params), &grid, &[0.0, 0.0], 2).unwrap();
        let (origin, _) = grid.nearest_node(&[0.0, 0.0]).unwrap();
        assert_eq!(field.distance(origin), 0.0);
        assert_eq!(field.unreachable(), 0);
        let mut worst: f64 = 0.0;
        for node in 0..grid.len() {
            let x = grid.coords(node);
            let exact = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if exact > 0.0 {
                worst = worst.max((field.distance(node) / exact - 1.0).abs());
            }
        }
        assert!(worst < 0.09, "worst relative deviation {worst}");
    }

    #[test]
    fn one_dimensional_field_matches_quadrature() {
        // d(0;x) = ∫₀^x c^{-1/2} with c = |s|, i.e. 2√x.
        let params = GrusinParameters::one_dimensional(0.5, 0.5);
        let x = 1.0;
        let grid = Grid::build(&params, &[1.0], &[401]).unwrap();
        let coeffs = CoefficientField::new(params);
        let field = numerical_distance(&coeffs, &grid, &[0.0], 1).unwrap();
        let (node, _) = grid.nearest_node(&[x]).unwrap();
        assert!((field.distance(node) / (2.0 * x.sqrt()) - 1.0).abs() < 0.02);

        // δ = 1/4, δ' = 1/2: compare with an independently integrated reference.
        let params = GrusinParameters::one_dimensional(0.25, 0.5);
        let coeffs = CoefficientField::new(params);
        let grid = Grid::build(&params, &[2.0], &[801]).unwrap();
        let field = numerical_distance(&coeffs, &grid, &[0.0], 1).unwrap();
        let rule = GaussRule::new(7);
        // substitution s = u², ds = 2u du removes the s^{-1/4} singularity
        let reference = rule.integrate_adaptive(
            |u| 2.0 * u * (u.sqrt() * (1.0 + u.powi(4)).powf(0.125)).recip(),
            0.0,
            2f64.sqrt(),
            1e-12,
        );
        let (node, _) = grid.nearest_node(&[2.0]).unwrap();
        assert!((field.distance(node) / reference - 1.0).abs() < 0.02);
    }

    #[test]
    fn richer_stencils_only_shorten_paths() {
        let params = GrusinParameters::classical();
        let grid = Grid::build(&params, &[2.0], &[41]).unwrap();
        let coeffs = CoefficientField::new(params);
        let source = [0.3, -0.2];
        let orders: Vec<DistanceField> = (1..=3)
            .map(|k| numerical_distance(&coeffs, &grid, &source, k).unwrap())
            .collect();
        for pair in orders.windows(2) {
            for node in 0..grid.len() {
                assert!(pair[1].distance(node) <= pair[0].distance(node) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn triangle_inequality_along_edges() {
        let params = GrusinParameters::new(1, 1, 0.3, 0.0, 0.7, 0.2).unwrap();
        let grid = Grid::build(&params, &[1.5], &[31]).unwrap();
        let coeffs = CoefficientField::new(params);
        let field = numerical_distance(&coeffs, &grid, &[0.0, 0.4], 2).unwrap();
        let weights = EdgeWeights::new(&coeffs, &grid, 2);
        for node in 0..grid.len() {
            let multi = grid.multi_index(node);
            for (k, o) in weights.offsets.iter().enumerate() {
                let target: Vec<i64> = multi.iter().zip(o).map(|(&i, &d)| i as i64 + d).collect();
                if target.iter().zip(grid.counts()).any(|(&t, &c)| t < 0 || t >= c as i64) {
                    continue;
                }
                let w = weights.get(grid.block1_index(node), k);
                let next = (node as i64 + weights.linear[k]) as usize;
                assert!(field.distance(next) <= field.distance(node) + w + 1e-12);
            }
        }
    }

    #[test]
    fn strong_block2_degeneracy_drops_crossing_edges() {
        let coeffs = CoefficientField::new(GrusinParameters::classical());
        let h = 0.1;
        // diagonal step from x₁ = 0 moving in x₂ diverges logarithmically
        assert!(segment_length(&coeffs, &[0.0], &[h], h, &[0], &[1]).is_infinite());
        // pure x₁ step from the origin is the plain Euclidean length
        assert!((segment_length(&coeffs, &[0.0], &[h], 0.0, &[0], &[1]) - h).abs() < 1e-12);
        // x₂ step away from the line: |Δ₂|/|x₁|
        assert!((segment_length(&coeffs, &[0.5], &[0.0], h, &[5], &[0]) - 0.2).abs() < 1e-12);
        // x₂ step on the line itself is infinite
        assert!(segment_length(&coeffs, &[0.0], &[0.0], h, &[0], &[0]).is_infinite());
    }

    #[test]
    fn weak_crossing_edges_integrate_the_power_law() {
        // c₁ = |x|^{1/2}: straight crossing from -h to h has length 2·∫₀^h s^{-1/4} = (8/3) h^{3/4}
        let coeffs = CoefficientField::new(GrusinParameters::one_dimensional(0.25, 0.25));
        let h = 0.01;
        let got = segment_length(&coeffs, &[-h], &[2.0 * h], 0.0, &[-1], &[2]);
        assert!((got - 8.0 / 3.0 * h.powf(0.75)).abs() < 1e-12);
    }
}
