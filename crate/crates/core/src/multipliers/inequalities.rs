use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EXACT_LIMIT;
use crate::linalg::SymmetricEigen;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyConfig {
    pub n: usize,
    pub gamma: f64,
    /// Multiple of the constant that is subtracted.
    pub fraction: f64,
    /// Cell-centred nodes per axis (even, so no node sits at the origin).
    pub nodes: usize,
    /// Nodes per axis of the pre-run that fits the constant when no closed form is known.
    pub coarse_nodes: usize,
}

impl Default for HardyConfig {
    fn default() -> Self {
        Self {
            n: 3,
            gamma: 1.0,
            fraction: 0.5,
            nodes: 14,
            coarse_nodes: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    /// `(n-2)²/4` for `γ = 1`, `n ≥ 3`.
    Optimal,
    /// Smallest eigenvalue of `|x|^γ L^γ |x|^γ` on the coarse grid.
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub config: HardyConfig,
    pub constant: f64,
    pub constant_source: ConstantSource,
    /// Fitted constant on the fine grid, for the stability comparison.
    pub fine_fit: Option<f64>,
    /// `λ_min(L^γ - fraction·a·|x|^{-2γ})`.
    pub lambda_min: f64,
}

/// Dirichlet Laplacian on the cell-centred grid of `[-1,1]^n` with `nodes` cells per
/// axis; returns the matrix and `|x|` at each node.
fn dirichlet_laplacian(n: usize, nodes: usize) -> (Mat<f64>, Vec<f64>) {
    let total = nodes.pow(n as u32);
    let h = 2.0 / nodes as f64;
    let inv = 1.0 / (h * h);
    let mut a = Mat::<f64>::zeros(total, total);
    let mut radius = vec![0.0; total];
    for idx in 0..total {
        let mut rest = idx;
        let mut stride = 1;
        let mut r2 = 0.0;
        for _ in 0..n {
            let i = rest % nodes;
            rest /= nodes;
            let x = -1.0 + (i as f64 + 0.5) * h;
            r2 += x * x;
            if i > 0 {
                a[(idx, idx - stride)] = -inv;
            }
            if i + 1 < nodes {
                a[(idx, idx + stride)] = -inv;
            }
            stride *= nodes;
        }
        a[(idx, idx)] = 2.0 * n as f64 * inv;
        radius[idx] = r2.sqrt();
    }
    (a, radius)
}

fn fractional_power(a: &Mat<f64>, gamma: f64) -> Result<Mat<f64>> {
    if gamma == 1.0 {
        return Ok(a.clone());
    }
    let eigen = SymmetricEigen::new(a)?;
    Ok(eigen.function_matrix(|l| l.max(0.0).powf(gamma)))
}

fn fit_constant(n: usize, nodes: usize, gamma: f64) -> Result<f64> {
    let (a, radius) = dirichlet_laplacian(n, nodes);
    let power = fractional_power(&a, gamma)?;
    let d: Vec<f64> = radius.iter().map(|r| r.powf(gamma)).collect();
    let scaled = Mat::from_fn(power.nrows(), power.ncols(), |i, j| d[i] * power[(i, j)] * d[j]);
    Ok(SymmetricEigen::new(&scaled)?.min_value())
}

/// Hardy's inequality `L^γ ≥ a|x|^{-2γ}` on a Dirichlet-truncated cell-centred grid.
pub fn hardy_check(config: &HardyConfig) -> Result<HardyReport> {
    let HardyConfig {
        n,
        gamma,
        fraction,
        nodes,
        coarse_nodes,
    } = *config;
    if n == 0 {
        return Err(Error::invalid("hardy.n", "dimension must be at least 1"));
    }
    if !(0.0..=1.0).contains(&gamma) || gamma >= n as f64 / 2.0 {
        return Err(Error::invalid(
            "hardy.gamma",
            format!("need 0 ≤ γ ≤ 1 and γ < n/2, got {gamma}"),
        ));
    }
    if !(fraction >= 0.0) || !fraction.is_finite() {
        return Err(Error::invalid(
            "hardy.fraction",
            format!("must be non-negative, got {fraction}"),
        ));
    }
    for (field, k) in [("hardy.nodes", nodes), ("hardy.coarse_nodes", coarse_nodes)] {
        if k < 2 || k % 2 == 1 {
            return Err(Error::invalid(
                field,
                format!("node count must be even and ≥ 2, got {k}"),
            ));
        }
        let total = k.checked_pow(n as u32).unwrap_or(usize::MAX);
        if total > EXACT_LIMIT {
            return Err(Error::Capacity {
                method: "dense Hardy eigensolve",
                limit: EXACT_LIMIT,
                requested: total,
            });
        }
    }
    let (constant, source, fine_fit) = if gamma == 1.0 && n >= 3 {
        ((n as f64 - 2.0).powi(2) / 4.0, ConstantSource::Optimal, None)
    } else {
        let coarse = fit_constant(n, coarse_nodes, gamma)?;
        let fine = fit_constant(n, nodes, gamma)?;
        (coarse, ConstantSource::Fitted, Some(fine))
    };
    let (a, radius) = dirichlet_laplacian(n, nodes);
    let mut m = fractional_power(&a, gamma)?;
    for (i, r) in radius.iter().enumerate() {
        m[(i, i)] -= fraction * constant * r.powf(-2.0 * gamma);
    }
    let lambda_min = SymmetricEigen::new(&m)?.min_value();
    Ok(HardyReport {
        config: config.clone(),
        constant,
        constant_source: source,
        fine_fit,
        lambda_min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub trials: usize,
    pub dim: usize,
    pub gamma: f64,
    pub sum_order: u32,
    /// Most negative eigenvalue of `A(I+A)^{-γ} - B(I+B)^{-γ}` over all pairs.
    pub monotone_worst: f64,
    /// Most negative eigenvalue of `(A+B)^s - 2^{-1+s}(A^s + B^s)`, `s = 2^{-order}`.
    pub sum_worst: f64,
    pub seed: u64,
}

/// Wishart-type `GGᵀ/dim`. Full rank: fractional powers of exactly singular
/// matrices turn eigenvalue roundoff `ε` into errors of size `ε^s`.
fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> Mat<f64> {
    let g = Mat::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale = 1.0 / dim as f64;
    let mut p = &g * g.transpose();
    for j in 0..dim {
        for i in 0..dim {
            p[(i, j)] *= scale;
        }
    }
    p
}

fn min_eigenvalue(m: &Mat<f64>) -> Result<f64> {
    let sym = Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    Ok(SymmetricEigen::new(&sym)?.min_value())
}

/// Random pairs `A = B + P` with `B, P` random positive definite; checks
/// `A(I+A)^{-γ} ≥ B(I+B)^{-γ}` and `(A+B)^s ≥ 2^{-1+s}(A^s + B^s)`, `s = 2^{-order}`.
pub fn operator_inequality_checks(
    trials: usize,
    dim: usize,
    gamma: f64,
    sum_order: u32,
    seed: u64,
) -> Result<InequalityReport> {
    if dim == 0 || dim > 50 {
        return Err(Error::invalid(
            "inequalities.dim",
            format!("need 1 ≤ dim ≤ 50, got {dim}"),
        ));
    }
    if trials < 100 {
        return Err(Error::invalid(
            "inequalities.trials",
            format!("need at least 100 trials, got {trials}"),
        ));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(
            "inequalities.gamma",
            format!("need 0 ≤ γ ≤ 1, got {gamma}"),
        ));
    }
    if sum_order == 0 {
        return Err(Error::invalid("inequalities.sum_order", "order must be at least 1"));
    }
    let s = 0.5f64.powi(sum_order as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut monotone_worst, mut sum_worst) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..trials {
        let b = random_psd(&mut rng, dim);
        let a = &b + random_psd(&mut rng, dim);
        let (ea, eb) = (SymmetricEigen::new(&a)?, SymmetricEigen::new(&b)?);
        let g = |l: f64| {
            let l = l.max(0.0);
            l * (1.0 + l).powf(-gamma)
        };
        let diff = ea.function_matrix(g) - eb.function_matrix(g);
        monotone_worst = monotone_worst.min(min_eigenvalue(&diff)?);

        let power = |l: f64| l.max(0.0).powf(s);
        let sum = SymmetricEigen::new(&(&a + &b))?.function_matrix(power);
        let parts = ea.function_matrix(power) + eb.function_matrix(power);
        let c = 2f64.powf(-1.0 + s);
        let diff = Mat::from_fn(dim, dim, |i, j| sum[(i, j)] - c * parts[(i, j)]);
        sum_worst = sum_worst.min(min_eigenvalue(&diff)?);
    }
    Ok(InequalityReport {
        trials,
        dim,
        gamma,
        sum_order,
        monotone_worst,
        sum_worst,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fraction_is_positive_semidefinite() {
        let config = HardyConfig {
            fraction: 0.0,
            nodes: 8,
            ..HardyConfig::default()
        };
        assert!(hardy_check(&config).unwrap().lambda_min >= 0.0);
    }

    #[test]
    fn hardy_half_optimal_holds_and_four_times_fails() {
        let half = hardy_check(&HardyConfig {
            nodes: 10,
            ..HardyConfig::default()
        })
        .unwrap();
        assert_eq!(half.constant, 0.25);
        assert_eq!(half.constant_source, ConstantSource::Optimal);
        assert!(half.lambda_min >= -1e-8, "{}", half.lambda_min);
        let four = hardy_check(&HardyConfig {
            nodes: 10,
            fraction: 4.0,
            ..HardyConfig::default()
        })
        .unwrap();
        assert!(four.lambda_min < 0.0);
    }

    #[test]
    fn fractional_constant_is_fitted() {
        let report = hardy_check(&HardyConfig {
            n: 1,
            gamma: 0.25,
            fraction: 0.5,
            nodes: 64,
            coarse_nodes: 16,
        })
        .unwrap();
        assert_eq!(report.constant_source, ConstantSource::Fitted);
        let fine = report.fine_fit.unwrap();
        assert!(report.constant > 0.0 && fine > 0.0);
        assert!(report.lambda_min >= -1e-8);
    }

    #[test]
    fn invalid_hardy_inputs() {
        for config in [
            HardyConfig {
                n: 2,
                ..HardyConfig::default()
            },
            HardyConfig {
                nodes: 7,
                ..HardyConfig::default()
            },
            HardyConfig {
                nodes: 18,
                ..HardyConfig::default()
            },
        ] {
            assert!(hardy_check(&config).is_err(), "{config:?}");
        }
    }

    #[test]
    fn equal_pair_has_zero_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = random_psd(&mut rng, 6);
        let e = SymmetricEigen::new(&b).unwrap();
        let g = |l: f64| l.max(0.0) * (1.0 + l.max(0.0)).powf(-0.3);
        let diff = e.function_matrix(g) - e.function_matrix(g);
        assert_eq!(min_eigenvalue(&diff).unwrap(), 0.0);
    }

    #[test]
    fn random_pairs_satisfy_both_inequalities() {
        let report = operator_inequality_checks(100, 12, 0.3, 1, 3).unwrap();
        assert!(report.monotone_worst >= -1e-10, "{}", report.monotone_worst);
        assert!(report.sum_worst >= -1e-10, "{}", report.sum_worst);
        assert!(operator_inequality_checks(100, 60, 0.3, 1, 3).is_err());
        assert!(operator_inequality_checks(10, 5, 0.3, 1, 3).is_err());
    }
}
