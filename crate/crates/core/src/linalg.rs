//! Small linear-algebra toolkit: a CSR matrix for the assembled operators and a
//! dense symmetric eigendecomposition backed by `faer`.

use std::fmt::Write as _;

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a square matrix from per-row entry lists. Duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                assert!(j < nrows, "column {j} out of range for {nrows} rows");
                if last == Some(j) {
                    *values.last_mut().expect("entry exists") += v;
                } else {
                    indices.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.nrows).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.nrows)
            .map(|i| {
                let mut diag = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        diag = v;
                    } else {
                        off += v.abs();
                    }
                }
                diag + off
            })
            .fold(0.0, f64::max)
    }

    /// Rayleigh quotient after `iters` power iterations from a fixed
    /// pseudo-random start vector. A lower estimate of the largest eigenvalue.
    pub fn power_lambda_max(&self, iters: usize) -> f64 {
        let n = self.nrows;
        if n == 0 {
            return 0.0;
        }
        let mut x: Vec<f64> = (0..n)
            .map(|i| ((i as u64).wrapping_mul(2_654_435_761) % (1 << 32)) as f64 / 4_294_967_296.0 - 0.5)
            .collect();
        let mut y = vec![0.0; n];
        let mut rayleigh = 0.0;
        for _ in 0..iters.max(1) {
            let nx = norm2(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            self.mul_vec_into(&x, &mut y);
            rayleigh = dot(&x, &y);
            std::mem::swap(&mut x, &mut y);
        }
        rayleigh
    }

    /// Copy with `shift[i]` added to the diagonal.
    pub fn with_diagonal_shift(&self, shift: &[f64]) -> Self {
        let rows = (0..self.nrows)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = self.row(i).collect();
                row.push((i, shift[i]));
                row
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.nrows);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Sorted `(row, col, value)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    /// Plain-text triplet dump: one `row col value` line per stored entry, sorted by
    /// row then column, values with 17 significant digits.
    pub fn to_triplet_text(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.triplets() {
            let _ = writeln!(out, "{i} {j} {v:.16e}");
        }
        out
    }
}

/// Eigenpairs of a dense symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column-major `n × n`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
    n: usize,
}

impl SymmetricEigen {
    pub fn new(matrix: &Mat<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::Precondition("eigendecomposition needs a square matrix".into()));
        }
        let eig = matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
        let s = eig.S();
        let u = eig.U();
        let values = (0..n).map(|k| s[k]).collect();
        let mut vectors = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                vectors[k * n + i] = u[(i, k)];
            }
        }
        Ok(Self { values, vectors, n })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(&Mat::from_fn(n, n, f))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `g(A) x` through the spectral decomposition.
    pub fn apply_function(&self, x: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for k in 0..n {
            let q = self.vector(k);
            let coeff = dot(q, x) * g(self.values[k]);
            if coeff != 0.0 {
                axpy(coeff, q, &mut y);
            }
        }
        y
    }

    /// Dense `g(A) = Q g(Λ) Qᵀ`.
    pub fn function_matrix(&self, g: impl Fn(f64) -> f64) -> Mat<f64> {
        let n = self.n;
        let q = Mat::from_fn(n, n, |i, k| self.vectors[k * n + i]);
        let gv: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        let scaled = Mat::from_fn(n, n, |i, k| q[(i, k)] * gv[k]);
        &scaled * q.transpose()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if rr.sqrt() <= rel_tol * bnorm {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    if rr.sqrt() <= rel_tol * bnorm {
        Ok(x)
    } else {
        Err(Error::Numerical(format!(
            "conjugate gradients did not reach {rel_tol:e} in {max_iter} iterations"
        )))
    }
}
