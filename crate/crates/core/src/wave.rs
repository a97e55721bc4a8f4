//! Leapfrog approximation of `cos(t√L)`, finite propagation speed and
//! Davies–Gaffney bounds.

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::DivergenceFormOperator;
use crate::error::{Error, Result};
use crate::evolution::Semigroup;
use crate::geometry::DistanceField;
use crate::linalg::dot;

const POWER_ITERATIONS: usize = 20;
const LAMBDA_PAD: f64 = 1.05;

/// Two consecutive leapfrog levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub current: Vec<f64>,
    pub previous: Vec<f64>,
    pub time: f64,
    pub dt: f64,
    /// Stability bound `2/√λ_max` the step was checked against.
    pub cfl: f64,
}

/// `u_{k+1} = 2u_k - u_{k-1} - Δt² L u_k`, started with `u₁ = u₀ - (Δt²/2) L u₀`.
pub struct Leapfrog<'a> {
    op: &'a DivergenceFormOperator,
    lambda_max: f64,
    cfl: f64,
    safety: f64,
}

impl<'a> Leapfrog<'a> {
    /// `λ_max` from 20 power iterations padded by 5%; steps are `safety × CFL`.
    pub fn new(op: &'a DivergenceFormOperator, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::invalid(
                "wave.safety",
                format!("step must be a fraction in (0,1] of the CFL bound, got {safety}"),
            ));
        }
        let lambda_max = op.matrix().power_lambda_max(POWER_ITERATIONS) * LAMBDA_PAD;
        let cfl = if lambda_max > 0.0 {
            2.0 / lambda_max.sqrt()
        } else {
            f64::INFINITY
        };
        Ok(Self {
            op,
            lambda_max,
            cfl,
            safety,
        })
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn cfl(&self) -> f64 {
        self.cfl
    }

    /// Largest step `≤ safety × CFL` that divides `t` evenly.
    pub fn step_for(&self, t: f64) -> (usize, f64) {
        if t == 0.0 {
            return (0, 0.0);
        }
        let target = self.safety * self.cfl;
        let steps = if target.is_finite() {
            (t / target).ceil().max(1.0) as usize
        } else {
            1
        };
        (steps, t / steps as f64)
    }

    pub fn start(&self, v: &[f64], dt: f64) -> Result<WaveState> {
        if v.len() != self.op.len() {
            return Err(Error::Precondition("initial datum has the wrong length".into()));
        }
        if dt > self.cfl {
            return Err(Error::Precondition(format!(
                "step {dt:e} violates the CFL bound {:e}",
                self.cfl
            )));
        }
        let lv = self.op.matrix().mul_vec(v);
        let current = v.iter().zip(&lv).map(|(u, l)| u - 0.5 * dt * dt * l).collect();
        Ok(WaveState {
            current,
            previous: v.to_vec(),
            time: dt,
            dt,
            cfl: self.cfl,
        })
    }

    pub fn step(&self, state: &mut WaveState) {
        let lu = self.op.matrix().mul_vec(&state.current);
        let dt2 = state.dt * state.dt;
        for ((prev, cur), l) in state.previous.iter_mut().zip(state.current.iter_mut()).zip(&lu) {
            let next = 2.0 * *cur - *prev - dt2 * l;
            *prev = *cur;
            *cur = next;
        }
        state.time += state.dt;
    }

    /// Staggered energy `‖(u_{k+1}-u_k)/Δt‖² + ⟨u_{k+1}, L u_k⟩` in the weighted
    /// inner product; exactly invariant under the scheme.
    pub fn energy(&self, state: &WaveState) -> f64 {
        let w = self.op.node_weight();
        let velocity: f64 = state
            .current
            .iter()
            .zip(&state.previous)
            .map(|(a, b)| ((a - b) / state.dt).powi(2))
            .sum();
        let lu = self.op.matrix().mul_vec(&state.previous);
        w * (velocity + dot(&state.current, &lu))
    }

    /// `cos(t√L) v`, with the time sign ignored (the scheme is even in `t`).
    pub fn propagate(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        let t = t.abs();
        let (steps, dt) = self.step_for(t);
        if steps == 0 {
            return Ok(v.to_vec());
        }
        let mut state = self.start(v, dt)?;
        for _ in 1..steps {
            self.step(&mut state);
        }
        Ok(state.current)
    }

    /// Propagation with the given fixed step count.
    pub fn propagate_steps(&self, v: &[f64], dt: f64, steps: usize) -> Result<Vec<f64>> {
        if steps == 0 {
            return Ok(v.to_vec());
        }
        let mut state = self.start(v, dt)?;
        for _ in 1..steps {
            self.step(&mut state);
        }
        Ok(state.current)
    }
}

/// `cos(t√L) v` with step `safety × CFL`.
pub fn cosine_propagator(op: &DivergenceFormOperator, v: &[f64], t: f64, safety: f64) -> Result<Vec<f64>> {
    Leapfrog::new(op, safety)?.propagate(v, t)
}

fn weighted_norm(op: &DivergenceFormOperator, v: &[f64]) -> f64 {
    (op.node_weight() * dot(v, v)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageSample {
    pub t: f64,
    /// `‖u 1_{d > (1+ε)t + 2h·order}‖ / ‖v‖`.
    pub leaked_fraction: f64,
    /// Relative change of the staggered energy over the run.
    pub energy_drift: f64,
}

/// Mass of `cos(t√L)v` outside the inflated light cone `{d(·,A) > (1+ε)t + 2h·order}`
/// where `field` is seeded on `A ⊇ supp v`.
pub fn finite_speed_check(
    op: &DivergenceFormOperator,
    field: &DistanceField,
    v: &[f64],
    times: &[f64],
    epsilon: f64,
    safety: f64,
) -> Result<Vec<LeakageSample>> {
    if v.len() != op.len() {
        return Err(Error::Precondition("initial datum has the wrong length".into()));
    }
    for (i, &x) in v.iter().enumerate() {
        if x != 0.0 && field.distance(op.grid_node(i)) > 0.0 {
            return Err(Error::Precondition(
                "initial datum is not supported in the source set".into(),
            ));
        }
    }
    let leapfrog = Leapfrog::new(op, safety)?;
    let slack = 2.0 * op.grid().max_spacing() * field.stencil_order() as f64;
    let norm_v = weighted_norm(op, v);
    if norm_v == 0.0 {
        return Err(Error::Precondition("initial datum vanishes".into()));
    }
    times
        .iter()
        .map(|&t| {
            let (steps, dt) = leapfrog.step_for(t);
            let (u, drift) = if steps == 0 {
                (v.to_vec(), 0.0)
            } else {
                let mut state = leapfrog.start(v, dt)?;
                let e0 = leapfrog.energy(&state);
                for _ in 1..steps {
                    leapfrog.step(&mut state);
                }
                let e1 = leapfrog.energy(&state);
                (state.current, if e0 > 0.0 { (e1 - e0).abs() / e0 } else { 0.0 })
            };
            let radius = (1.0 + epsilon) * t + slack;
            let outside: Vec<f64> = u
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    if field.distance(op.grid_node(i)) > radius {
                        x
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(LeakageSample {
                t,
                leaked_fraction: if t == 0.0 {
                    0.0
                } else {
                    weighted_norm(op, &outside) / norm_v
                },
                energy_drift: drift,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaviesGaffneySample {
    pub t: f64,
    /// `d(A;B)²/4t`.
    pub exponent: f64,
    /// `log|(1_A, e^{-tL} 1_B)|`, `-∞` when the pairing vanishes.
    pub log_pairing: f64,
    pub log_bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaviesGaffneyReport {
    pub distance: f64,
    pub epsilon: f64,
    pub samples: Vec<DaviesGaffneySample>,
    pub worst_margin: f64,
}

/// `max_t log|(1_A, S_t 1_B)| - [-d(A;B)²/(4t(1+ε)) + log(‖1_A‖‖1_B‖)]` with `d(A;B)`
/// read from `field`, which must be seeded on `A` (operator unknowns are mapped to
/// grid nodes). Partially overlapping sets are rejected; `A = B` is the trivial case.
pub fn davies_gaffney_check(
    semi: &Semigroup,
    field: &DistanceField,
    set_a: &[usize],
    set_b: &[usize],
    times: &[f64],
    epsilon: f64,
) -> Result<DaviesGaffneyReport> {
    let op = semi.operator();
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::Precondition("sets must be non-empty".into()));
    }
    let mut sorted_a = set_a.to_vec();
    let mut sorted_b = set_b.to_vec();
    sorted_a.sort_unstable();
    sorted_a.dedup();
    sorted_b.sort_unstable();
    sorted_b.dedup();
    let identical = sorted_a == sorted_b;
    if !identical && sorted_a.iter().any(|a| sorted_b.binary_search(a).is_ok()) {
        return Err(Error::Precondition("sets A and B overlap".into()));
    }
    let distance = if identical {
        0.0
    } else {
        sorted_b
            .iter()
            .map(|&b| field.distance(op.grid_node(b)))
            .fold(f64::INFINITY, f64::min)
    };
    let w = op.node_weight();
    let mut indicator = vec![0.0; op.len()];
    for &b in &sorted_b {
        indicator[b] = 1.0;
    }
    let evolved = semi.apply_times(&indicator, times)?;
    let log_norms = 0.5 * (w * sorted_a.len() as f64).ln() + 0.5 * (w * sorted_b.len() as f64).ln();
    let mut samples = Vec::with_capacity(times.len());
    for (&t, u) in times.iter().zip(&evolved) {
        let pairing: f64 = w * sorted_a.iter().map(|&a| u[a]).sum::<f64>();
        let exponent = distance * distance / (4.0 * t);
        let log_bound = -exponent / (1.0 + epsilon) + log_norms;
        let log_pairing = if pairing == 0.0 {
            f64::NEG_INFINITY
        } else {
            pairing.abs().ln()
        };
        samples.push(DaviesGaffneySample {
            t,
            exponent,
            log_pairing,
            log_bound,
            margin: log_pairing - log_bound,
        });
    }
    let worst_margin = samples.iter().map(|s| s.margin).fold(f64::NEG_INFINITY, f64::max);
    Ok(DaviesGaffneyReport {
        distance,
        epsilon,
        samples,
        worst_margin,
    })
}

/// Random block pairs for [`sample_davies_gaffney`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DaviesGaffneySampling {
    pub samples: usize,
    /// Blocks are the `(2·half_width+1)^d` nodes around a random centre.
    pub half_width: usize,
    /// Range of `d(A;B)²/4t` from which `t` is drawn.
    pub exponent_range: (f64, f64),
    pub epsilon: f64,
    /// Centres are drawn from this fraction of each half-axis.
    pub fill: f64,
    /// Times below `min_cells · d · h` are redrawn; shorter times probe lattice
    /// rather than diffusive tails.
    pub min_cells: f64,
    pub stencil_order: usize,
    pub seed: u64,
}

impl Default for DaviesGaffneySampling {
    fn default() -> Self {
        Self {
            samples: 20,
            half_width: 1,
            exponent_range: (4.0, 36.0),
            epsilon: 0.2,
            fill: 0.8,
            min_cells: 0.25,
            stencil_order: 2,
            seed: 0,
        }
    }
}

/// Runs [`davies_gaffney_check`] on `config.samples` random disjoint block pairs,
/// one time each. Deterministic given the seed.
pub fn sample_davies_gaffney(semi: &Semigroup, config: &DaviesGaffneySampling) -> Result<Vec<DaviesGaffneyReport>> {
    let (e_lo, e_hi) = config.exponent_range;
    if !(e_lo > 0.0 && e_hi >= e_lo) {
        return Err(Error::invalid("davies_gaffney.exponent_range", "need 0 < lo ≤ hi"));
    }
    if !(config.fill > 0.0 && config.fill <= 1.0) {
        return Err(Error::invalid("davies_gaffney.fill", "must lie in (0,1]"));
    }
    let op = semi.operator();
    let grid = op.grid();
    let dim = grid.dim();
    let limits: Vec<i64> = grid
        .counts()
        .iter()
        .map(|&c| ((((c - 1) / 2) as f64 * config.fill) as i64 - config.half_width as i64).max(0))
        .collect();
    let w = config.half_width as i64;
    let block = |centre: &[i64]| -> Option<Vec<usize>> {
        let side = 2 * w + 1;
        let mut out = Vec::with_capacity(side.pow(dim as u32) as usize);
        for flat in 0..side.pow(dim as u32) {
            let mut rest = flat;
            let offsets: Vec<i64> = centre
                .iter()
                .map(|&c| {
                    let o = rest % side - w;
                    rest /= side;
                    c + o
                })
                .collect();
            out.push(op.index_of(grid.index_centred(&offsets)?)?);
        }
        Some(out)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut reports = Vec::with_capacity(config.samples);
    let mut attempts = 0usize;
    while reports.len() < config.samples {
        attempts += 1;
        if attempts > 1000 * config.samples.max(1) {
            return Err(Error::Numerical(
                "could not draw admissible Davies–Gaffney pairs".into(),
            ));
        }
        let mut draw = || -> Vec<i64> { limits.iter().map(|&l| rng.gen_range(-l..=l)).collect() };
        let (ca, cb) = (draw(), draw());
        let (Some(a), Some(b)) = (block(&ca), block(&cb)) else {
            continue;
        };
        if a.iter().any(|x| b.contains(x)) {
            continue;
        }
        let nodes_a: Vec<usize> = a.iter().map(|&i| op.grid_node(i)).collect();
        let field = DistanceField::from_nodes(op.coefficients(), grid, &nodes_a, config.stencil_order)?;
        let d = b
            .iter()
            .map(|&i| field.distance(op.grid_node(i)))
            .fold(f64::INFINITY, f64::min);
        if !(d > 0.0 && d.is_finite()) {
            continue;
        }
        let e = rng.gen_range(e_lo..=e_hi);
        let t = d * d / (4.0 * e);
        if t < config.min_cells * d * grid.max_spacing() {
            continue;
        }
        reports.push(davies_gaffney_check(semi, &field, &a, &b, &[t], config.epsilon)?);
    }
    Ok(reports)
}
