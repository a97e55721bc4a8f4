use crate::error::{Error, Result};
use crate::linalg::{axpy, conjugate_gradient, dot, norm2, CsrMatrix, SymmetricEigen};

/// Lanczos approximation of `e^{-tA}v` with time stepping.
///
/// The absolute error budget `tol·scale` is spread over the substeps in
/// proportion to their length. Each substep uses the a-posteriori estimate
/// `|w| τ β_m |e_mᵀ φ₁(-τT_m) e₁|` and halves `τ` on the current basis until it fits.
pub(crate) fn lanczos_expm(a: &CsrMatrix, v: &[f64], t: f64, tol: f64, scale: f64, m_max: usize) -> Result<Vec<f64>> {
    let n = v.len();
    let mut w = v.to_vec();
    let mut done = 0.0;
    let mut tau_next = t;
    let budget = tol * scale.max(f64::MIN_POSITIVE);
    let m_max = m_max.min(n).max(1);
    while done < t {
        let beta0 = norm2(&w);
        if beta0 == 0.0 {
            break;
        }
        let remaining = t - done;
        let allowed = |tau: f64| budget * tau / t;
        let basis = LanczosBasis::build(a, &w, m_max, |p| p.error(remaining) * beta0 <= allowed(remaining));
        let proj = &basis.projected;
        let mut tau = if proj.exhausted {
            remaining
        } else {
            tau_next.min(remaining)
        };
        let mut halvings = 0;
        while !proj.exhausted && proj.error(tau) * beta0 > allowed(tau) {
            tau *= 0.5;
            halvings += 1;
            if halvings > 80 {
                return Err(Error::Numerical("Krylov step size underflow".into()));
            }
        }
        let y = proj.exp_coefficients(tau);
        w.iter_mut().for_each(|x| *x = 0.0);
        for (j, &c) in y.iter().enumerate() {
            axpy(beta0 * c, &basis.vectors[j], &mut w);
        }
        done += tau;
        if remaining - tau <= 1e-14 * t {
            break;
        }
        tau_next = if halvings == 0 { 2.0 * tau } else { tau };
    }
    debug_assert_eq!(w.len(), n);
    Ok(w)
}

struct LanczosBasis {
    vectors: Vec<Vec<f64>>,
    projected: Projected,
}

/// Eigendecomposition of the tridiagonal `T_m` and the trailing `β_m`.
struct Projected {
    eigen: SymmetricEigen,
    /// Zero after breakdown.
    beta_last: f64,
    exhausted: bool,
}

impl LanczosBasis {
    fn build(a: &CsrMatrix, w: &[f64], m_max: usize, mut good_enough: impl FnMut(&Projected) -> bool) -> Self {
        let n = w.len();
        let beta0 = norm2(w);
        let mut vectors = vec![w.iter().map(|x| x / beta0).collect::<Vec<f64>>()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut z = vec![0.0; n];
        let scale = a.gershgorin_bound().max(f64::MIN_POSITIVE);
        loop {
            let j = vectors.len() - 1;
            a.mul_vec_into(&vectors[j], &mut z);
            alpha.push(dot(&vectors[j], &z));
            for _ in 0..2 {
                for q in &vectors {
                    let c = dot(q, &z);
                    axpy(-c, q, &mut z);
                }
            }
            let bj = norm2(&z);
            let m = j + 1;
            if bj <= 1e-12 * scale || m == n {
                let projected = Projected::new(&alpha, &beta, 0.0, true);
                return Self { vectors, projected };
            }
            if m == m_max || m % 8 == 0 {
                let projected = Projected::new(&alpha, &beta, bj, false);
                if m == m_max || good_enough(&projected) {
                    return Self { vectors, projected };
                }
            }
            beta.push(bj);
            vectors.push(z.iter().map(|x| x / bj).collect());
        }
    }
}

impl Projected {
    fn new(alpha: &[f64], beta: &[f64], beta_last: f64, exhausted: bool) -> Self {
        let eigen = SymmetricEigen::from_fn(alpha.len(), |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        })
        .expect("tridiagonal eigendecomposition");
        Self {
            eigen,
            beta_last,
            exhausted,
        }
    }

    /// `e^{-τT} e₁` in the Lanczos basis.
    fn exp_coefficients(&self, tau: f64) -> Vec<f64> {
        let m = self.eigen.dim();
        let mut y = vec![0.0; m];
        for k in 0..m {
            let q = self.eigen.vector(k);
            axpy(q[0] * (-tau * self.eigen.values[k]).exp(), q, &mut y);
        }
        y
    }

    /// `τ β_m |e_mᵀ φ₁(-τT) e₁|` with `φ₁(z) = (e^z - 1)/z`, per unit of `|w|`.
    fn error(&self, tau: f64) -> f64 {
        if self.exhausted {
            return 0.0;
        }
        let m = self.eigen.dim();
        let last: f64 = (0..m)
            .map(|k| {
                let q = self.eigen.vector(k);
                let z = -tau * self.eigen.values[k];
                let phi1 = if z.abs() < 1e-300 { 1.0 } else { z.exp_m1() / z };
                q[0] * phi1 * q[m - 1]
            })
            .sum();
        tau * self.beta_last * last.abs()
    }
}

const CHUNK_RATE: f64 = 200.0;

/// `e^{-tA}v = Σ_k Pois(qt; k) P^k v` with `P = I - A/q ≥ 0` and `q` the largest
/// diagonal entry. Time is cut into chunks with `qτ ≤ 200`; each series is cut when
/// the remaining Poisson mass drops below `tail`. Preserves sign exactly.
pub(crate) fn uniformization(a: &CsrMatrix, v: &[f64], t: f64, tail: f64) -> Vec<f64> {
    let q = a.diagonal().into_iter().fold(0.0, f64::max) * (1.0 + 1e-12);
    if q == 0.0 || t == 0.0 {
        return v.to_vec();
    }
    let chunks = (q * t / CHUNK_RATE).ceil().max(1.0);
    let lambda = q * t / chunks;
    let n = v.len();
    let mut current = v.to_vec();
    let mut term = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..chunks as usize {
        term.copy_from_slice(&current);
        let mut weight = (-lambda).exp();
        let mut acc: Vec<f64> = term.iter().map(|x| weight * x).collect();
        let mut k = 0usize;
        loop {
            k += 1;
            a.mul_vec_into(&term, &mut next);
            for (ti, ni) in term.iter_mut().zip(&next) {
                *ti -= ni / q;
            }
            weight *= lambda / k as f64;
            axpy(weight, &term, &mut acc);
            let kf = k as f64;
            if kf + 1.0 > lambda && weight * lambda / (kf + 1.0 - lambda) < tail {
                break;
            }
        }
        current = acc;
    }
    current
}

/// Crank–Nicolson with conjugate-gradient solves. The step is the smaller of the
/// accuracy step `t·sqrt(tol/0.112)` (from `max_λ λ³ e^{-λt}`) and the damping step
/// `sqrt(4t/(18 λ_max))` that keeps the stiff modes below `e^{-18}`.
pub(crate) fn crank_nicolson(a: &CsrMatrix, v: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    let lambda_max = a.gershgorin_bound().max(f64::MIN_POSITIVE);
    let dt = (t * (tol / 0.112).sqrt()).min((4.0 * t / (18.0 * lambda_max)).sqrt());
    let steps = (t / dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let n = v.len();
    let mut u = v.to_vec();
    let mut au = vec![0.0; n];
    for _ in 0..steps {
        a.mul_vec_into(&u, &mut au);
        let rhs: Vec<f64> = u.iter().zip(&au).map(|(x, y)| x - 0.5 * dt * y).collect();
        u = conjugate_gradient(
            |x, y| {
                a.mul_vec_into(x, y);
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = xi + 0.5 * dt * *yi;
                }
            },
            &rhs,
            Some(&u),
            1e-13,
            10 * n + 100,
        )?;
    }
    Ok(u)
}
