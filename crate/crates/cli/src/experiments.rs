//! One runner per experiment kind. Each returns its checks, fitted constants
//! and CSV tables; [`crate::run`] writes them out.

use grusin_core::evolution::{
    conservation_report, gaussian_bounds, kernel_comparison, ondiagonal_decay, separation_check, EXACT_LIMIT,
};
use grusin_core::fit::{geometric_grid, loglog_slope};
use grusin_core::geometry::{closed_form_distance, doubling_exponent};
use grusin_core::multipliers::{
    hardy_check, nash_check, operator_inequality_checks, vf_volume, HardyConfig, NashConfig,
};
use grusin_core::wave::{finite_speed_check, sample_davies_gaffney};
use grusin_core::{
    BallVolumeTable, Boundary, CoefficientField, DistanceField, DivergenceFormOperator, EvolutionMethod, Grid,
    GrusinParameters, MultiplierSpec, Point, Semigroup,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::*;
use crate::csv::Table;
use crate::error::{CliError, Result};
use crate::report::{Check, Comparison, FittedConstant};

#[derive(Debug, Default)]
pub struct Output {
    pub checks: Vec<Check>,
    pub fitted: Vec<FittedConstant>,
    pub tables: Vec<Table>,
}

pub fn execute(config: &ExperimentConfig) -> Result<Output> {
    match &config.experiment {
        Experiment::Distance(e) => distance(config, e),
        Experiment::Volume(e) => volume(config, e),
        Experiment::HeatKernel(e) => heat_kernel(config, e),
        Experiment::Conservation(e) => conservation(config, e),
        Experiment::Decay(e) => decay(config, e),
        Experiment::Separation(e) => separation(config, e),
        Experiment::Compare(e) => compare(config, e),
        Experiment::Wave(e) => wave(config, e),
        Experiment::Nash(e) => nash(config, e),
    }
}

fn grid_spec(config: &ExperimentConfig) -> Result<&GridSpec> {
    config.grid.as_ref().ok_or_else(|| {
        CliError::invalid(
            "grid",
            format!("required by `{}` experiments", config.experiment.kind()),
        )
    })
}

fn base_grid(config: &ExperimentConfig) -> Result<Grid> {
    let spec = grid_spec(config)?;
    let dim = config.params.dim();
    Ok(Grid::build(&config.params, &spec.extents(dim), &spec.nodes(dim))?)
}

fn boundary(config: &ExperimentConfig) -> Boundary {
    config.grid.as_ref().map_or(Boundary::NeumannTruncation, |g| g.boundary)
}

/// The configured method, or exact up to the dense guard and tight Krylov beyond.
fn method_for(config: &ExperimentConfig, unknowns: usize) -> EvolutionMethod {
    config.method.unwrap_or(if unknowns <= EXACT_LIMIT {
        EvolutionMethod::exact()
    } else {
        EvolutionMethod::krylov(1e-10)
    })
}

fn nearest_unknown(op: &DivergenceFormOperator, point: &[f64]) -> Result<usize> {
    let (node, _) = op.grid().nearest_node(point)?;
    op.index_of(node)
        .ok_or_else(|| CliError::invalid("sources", format!("point {point:?} is not an unknown of the operator")))
}

fn coords_text(grid: &Grid, node: usize) -> String {
    grid.coords(node)
        .iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn conservation(config: &ExperimentConfig, e: &ConservationExperiment) -> Result<Output> {
    let grid = base_grid(config)?;
    let coeffs = CoefficientField::new(config.params);
    let op = DivergenceFormOperator::assemble(&grid, &coeffs, boundary(config))?;
    let semi = Semigroup::new(&op, method_for(config, op.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sources = rand::seq::index::sample(&mut rng, op.len(), e.sources.min(op.len())).into_vec();
    let report = conservation_report(&semi, &e.times.values(), &sources)?;
    let mut table = Table::new("conservation.csv", &["source", "x", "t", "mass", "deviation"]);
    for &(s, t, mass) in &report.samples {
        let node = op.grid_node(s);
        table.push(vec![
            node.into(),
            coords_text(&grid, node).as_str().into(),
            t.into(),
            mass.into(),
            (1.0 - mass).abs().into(),
        ]);
    }
    Ok(Output {
        checks: vec![Check::new(
            "max |1 - Σ w K_t|",
            report.max_deviation,
            Comparison::AtMost(e.tolerance),
        )],
        fitted: Vec::new(),
        tables: vec![table],
    })
}

fn decay(config: &ExperimentConfig, e: &DecayExperiment) -> Result<Output> {
    let grid = base_grid(config)?;
    let coeffs = CoefficientField::new(config.params);
    let op = DivergenceFormOperator::assemble(&grid, &coeffs, boundary(config))?;
    let mut candidates = Vec::with_capacity(e.candidates.count);
    for k in 0..e.candidates.count as i64 {
        let mut offsets = vec![0i64; grid.dim()];
        offsets[0] = e.candidates.first + k;
        let unknown = grid
            .index_centred(&offsets)
            .and_then(|n| op.index_of(n))
            .ok_or_else(|| {
                CliError::invalid("experiment.candidates", format!("offset {offsets:?} is not an unknown"))
            })?;
        candidates.push(unknown);
    }
    let nodes: Vec<usize> = candidates.iter().map(|&c| op.grid_node(c)).collect();
    let field = DistanceField::from_nodes(&coeffs, &grid, &nodes, e.stencil_order)?;
    let boundary_distance = (0..grid.len())
        .filter(|&n| grid.is_boundary(n) && op.index_of(n).is_some())
        .map(|n| field.distance(n))
        .fold(f64::INFINITY, f64::min);
    let semi = Semigroup::new(&op, method_for(config, op.len()))?;
    let series = ondiagonal_decay(
        &semi,
        &candidates,
        &e.times.values(),
        Some(boundary_distance),
        e.tail_limit,
    )?;
    let mut table = Table::new(
        "decay.csv",
        &["t", "sup_diagonal", "argmax", "boundary_tail", "accepted"],
    );
    for s in &series.samples {
        table.push(vec![
            s.t.into(),
            s.sup_diagonal.into(),
            op.grid_node(s.argmax).into(),
            s.boundary_tail.into(),
            s.accepted.into(),
        ]);
    }
    let mut checks = Vec::new();
    for w in &e.windows {
        let slope = series.slope(w.t_lo, w.t_hi).unwrap_or(f64::NAN);
        checks.push(Check::new(
            format!("log-log slope on [{}, {}]", w.t_lo, w.t_hi),
            slope,
            Comparison::Within {
                target: w.expected,
                tolerance: w.tolerance,
            },
        ));
    }
    Ok(Output {
        checks,
        fitted: Vec::new(),
        tables: vec![table],
    })
}

fn distance(config: &ExperimentConfig, e: &DistanceExperiment) -> Result<Output> {
    let params = config.params;
    let coeffs = CoefficientField::new(params);
    let base = base_grid(config)?;
    let halves: Vec<i64> = base.counts().iter().map(|&c| (c as i64 - 1) / 2).collect();
    let limits: Vec<i64> = halves.iter().map(|&h| (h as f64 * e.fill) as i64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<i64> { limits.iter().map(|&l| rng.gen_range(-l..=l)).collect() };
    let euclid = |a: &[i64], b: &[i64]| -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(k, (x, y))| ((x - y) as f64 * base.spacing()[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut pairs: Vec<(Vec<i64>, Vec<Vec<i64>>)> = Vec::with_capacity(e.sources);
    let mut attempts = 0usize;
    while pairs.len() < e.sources {
        let s = draw(&mut rng);
        let mut targets = Vec::with_capacity(e.targets_per_source);
        while targets.len() < e.targets_per_source {
            attempts += 1;
            if attempts > 10_000 * e.sources * e.targets_per_source {
                return Err(CliError::invalid(
                    "experiment.min_separation",
                    "too large for the sampling box",
                ));
            }
            let t = draw(&mut rng);
            if euclid(&s, &t) > e.min_separation {
                targets.push(t);
            }
        }
        pairs.push((s, targets));
    }

    let mut table = Table::new(
        "distance.csv",
        &["level", "source", "target", "numerical", "closed_form", "ratio"],
    );
    let mut bands = Vec::with_capacity(e.levels);
    let mut grid = base;
    let mut worst_ratio_ok = true;
    for level in 0..e.levels {
        if level > 0 {
            grid = grid.refined();
        }
        let scale = 1i64 << level;
        let node = |c: &[i64]| -> Result<usize> {
            let scaled: Vec<i64> = c.iter().map(|x| x * scale).collect();
            grid.index_centred(&scaled)
                .ok_or_else(|| CliError::Core(grusin_core::Error::Internal("sampled node left the grid".into())))
        };
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (s, targets) in &pairs {
            let sn = node(s)?;
            let field = DistanceField::from_nodes(&coeffs, &grid, &[sn], e.stencil_order)?;
            let ps = Point::from_coords(&params, &grid.coords(sn))?;
            for t in targets {
                let tn = node(t)?;
                let pt = Point::from_coords(&params, &grid.coords(tn))?;
                let numerical = field.distance(tn);
                let closed = closed_form_distance(&params, &ps, &pt)?;
                let ratio = numerical / closed;
                worst_ratio_ok &= ratio.is_finite() && ratio > 0.0;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                table.push(vec![
                    level.into(),
                    coords_text(&grid, sn).as_str().into(),
                    coords_text(&grid, tn).as_str().into(),
                    numerical.into(),
                    closed.into(),
                    ratio.into(),
                ]);
            }
        }
        bands.push(hi.max(1.0 / lo));
    }
    let fitted = FittedConstant::new("band constant a", bands, e.stability_factor);
    Ok(Output {
        checks: vec![
            Check::flag("all ratios finite and positive", worst_ratio_ok),
            Check::new(
                "finest band constant a",
                *fitted.values.last().unwrap(),
                Comparison::LessThan(f64::INFINITY),
            ),
        ],
        fitted: vec![fitted],
        tables: vec![table],
    })
}

fn volume(config: &ExperimentConfig, e: &VolumeExperiment) -> Result<Output> {
    let params = config.params;
    let coeffs = CoefficientField::new(params);
    let derived = params.derive();
    let mut table = Table::new("volume.csv", &["center", "r", "volume", "closed_form", "below_cell"]);
    let mut doubling = Table::new("doubling.csv", &["center", "doubling_exponent"]);
    let mut checks = Vec::new();
    for c in &e.centers {
        let center = Point::from_coords(&params, &c.point)?;
        let radii = c.radii.values();
        let numerical = BallVolumeTable::adaptive(&coeffs, center.clone(), &radii, e.nodes, e.stencil_order)?;
        let closed = BallVolumeTable::closed_form(&params, center, &radii)?;
        let label = c.point.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        for (k, &r) in radii.iter().enumerate() {
            table.push(vec![
                label.as_str().into(),
                r.into(),
                numerical.volumes[k].into(),
                closed.volumes[k].into(),
                numerical.below_cell[k].into(),
            ]);
        }
        if let Some(expected) = c.expected_slope {
            let slope = loglog_slope(&radii, &numerical.volumes)?;
            checks.push(Check::new(
                format!("volume slope at ({label})"),
                slope,
                Comparison::Within {
                    target: expected,
                    tolerance: c.slope_tolerance * expected.abs(),
                },
            ));
        }
        if let Some(margin) = e.doubling_margin {
            let exponent = doubling_exponent(&numerical)?;
            doubling.push(vec![label.as_str().into(), exponent.into()]);
            checks.push(Check::new(
                format!("doubling exponent at ({label})"),
                exponent,
                Comparison::AtMost(derived.d.max(derived.dp) + margin),
            ));
        }
    }
    let mut tables = vec![table];
    if e.doubling_margin.is_some() {
        tables.push(doubling);
    }
    Ok(Output {
        checks,
        fitted: Vec::new(),
        tables,
    })
}

fn heat_kernel(config: &ExperimentConfig, e: &HeatKernelExperiment) -> Result<Output> {
    let coeffs = CoefficientField::new(config.params);
    let times = e.times.values();
    let mut out = Output::default();
    let base = base_grid(config)?;
    let op = DivergenceFormOperator::assemble(&base, &coeffs, boundary(config))?;
    let semi = Semigroup::new(&op, method_for(config, op.len()))?;

    let sources: Vec<usize> = e
        .sources
        .iter()
        .map(|p| nearest_unknown(&op, p))
        .collect::<Result<_>>()?;
    let slices = semi.kernel_table(&sources, &times)?;
    if e.kernel_csv {
        let mut kernels = Table::new("heat_kernel.csv", &["source", "t", "x", "kernel"]);
        for col in &slices {
            for k in col {
                let src = op.grid_node(k.source);
                for (i, &v) in k.values.iter().enumerate() {
                    let node = op.grid_node(i);
                    kernels.push(vec![
                        src.into(),
                        k.t.into(),
                        coords_text(&base, node).as_str().into(),
                        v.into(),
                    ]);
                }
            }
        }
        out.tables.push(kernels);
    }

    if let Some(oracle) = &e.oracle {
        let mut table = Table::new("oracle.csv", &["source", "t", "sup_error", "boundary_tail"]);
        let mut worst = 0.0f64;
        let d = base.dim() as f64;
        for col in &slices {
            for k in col {
                let y = base.coords(op.grid_node(k.source));
                let wall = y
                    .iter()
                    .zip(base.extents())
                    .map(|(yk, l)| l - yk.abs())
                    .fold(f64::INFINITY, f64::min);
                let tail = (-wall * wall / (4.0 * k.t)).exp();
                if tail > oracle.tail_guard {
                    return Err(CliError::Core(grusin_core::Error::Precondition(format!(
                        "boundary-mass guard: e^(-d²/4t) = {tail:e} exceeds {:e} at t = {}",
                        oracle.tail_guard, k.t
                    ))));
                }
                let norm = (4.0 * std::f64::consts::PI * k.t).powf(-0.5 * d);
                let err = k
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let x = base.coords(op.grid_node(i));
                        let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
                        (v - norm * (-r2 / (4.0 * k.t)).exp()).abs()
                    })
                    .fold(0.0, f64::max);
                worst = worst.max(err);
                table.push(vec![op.grid_node(k.source).into(), k.t.into(), err.into(), tail.into()]);
            }
        }
        out.checks.push(Check::new(
            "sup |K_t - Gauss|",
            worst,
            Comparison::LessThan(oracle.tolerance),
        ));
        out.tables.push(table);
    }

    if let Some(b) = &e.bounds {
        let mut table = Table::new(
            "gaussian_bounds.csv",
            &[
                "level",
                "unknowns",
                "upper_constant",
                "lower_constant",
                "pairs_used",
                "far_field_ratio",
            ],
        );
        let (mut uppers, mut lowers) = (Vec::new(), Vec::new());
        let mut grid = base.clone();
        for level in 0..b.levels {
            if level > 0 {
                grid = grid.refined();
            }
            let op = DivergenceFormOperator::assemble(&grid, &coeffs, boundary(config))?;
            let samples: Vec<usize> = e
                .sources
                .iter()
                .map(|p| nearest_unknown(&op, p))
                .collect::<Result<_>>()?;
            let fields: Vec<DistanceField> = samples
                .iter()
                .map(|&s| DistanceField::from_nodes(&coeffs, &grid, &[op.grid_node(s)], b.stencil_order))
                .collect::<grusin_core::Result<_>>()?;
            let semi = Semigroup::new(&op, method_for(config, op.len()))?;
            let r = gaussian_bounds(&semi, &samples, &fields, &times, b.epsilon, b.exponent_cap)?;
            table.push(vec![
                level.into(),
                op.len().into(),
                r.upper_constant.into(),
                r.lower_constant.into(),
                r.pairs_used.into(),
                r.far_field_ratio.unwrap_or(f64::NAN).into(),
            ]);
            out.checks.push(Check::new(
                format!("upper constant finite (level {level})"),
                r.upper_constant,
                Comparison::LessThan(f64::INFINITY),
            ));
            out.checks.push(Check::new(
                format!("lower constant b > 0 (level {level})"),
                r.lower_constant,
                Comparison::GreaterThan(0.0),
            ));
            uppers.push(r.upper_constant);
            lowers.push(r.lower_constant);
        }
        out.fitted.push(FittedConstant::new(
            "Gaussian upper constant a",
            uppers,
            b.stability_factor,
        ));
        out.fitted.push(FittedConstant::new(
            "on-diagonal lower constant b",
            lowers,
            b.stability_factor,
        ));
        out.tables.push(table);
    }
    Ok(out)
}

fn separation(config: &ExperimentConfig, e: &SeparationExperiment) -> Result<Output> {
    let spec = grid_spec(config)?;
    let dim = config.params.dim();
    let counts = spec.nodes(dim);
    let finest: usize = counts.iter().map(|&c| (c - 1) * (1 << (e.levels - 1)) + 1).product();
    let report = separation_check(
        &config.params,
        &spec.extents(dim),
        &counts,
        e.levels,
        e.t,
        &e.sources,
        method_for(config, finest),
        e.stencil_order,
    )?;
    let mut table = Table::new(
        "separation.csv",
        &[
            "level",
            "unknowns",
            "spacing",
            "cross_min",
            "cross_max",
            "gap",
            "coupling",
        ],
    );
    for (k, l) in report.levels.iter().enumerate() {
        table.push(vec![
            k.into(),
            l.counts.iter().product::<usize>().into(),
            l.spacing.into(),
            l.cross_min.into(),
            l.cross_max.into(),
            l.gap.into(),
            l.coupling.into(),
        ]);
    }
    let gaps: Vec<f64> = report.levels.iter().map(|l| l.gap).collect();
    let mut checks = vec![Check::flag(
        format!("regime matches δ₁ = {}", report.delta1),
        report.strongly_degenerate == (report.delta1 >= 0.5),
    )];
    if report.strongly_degenerate {
        let cross = report.levels.iter().map(|l| l.cross_max).fold(0.0, f64::max);
        checks.push(Check::new("max cross-kernel", cross, Comparison::AtMost(0.0)));
        let growth = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "largest gap increase under refinement",
            growth,
            Comparison::AtMost(e.gap_tolerance),
        ));
    } else {
        let cross = report.levels.iter().map(|l| l.cross_min).fold(f64::INFINITY, f64::min);
        checks.push(Check::new("min cross-kernel", cross, Comparison::GreaterThan(0.0)));
        let floor = report.min_gap() / gaps[0];
        checks.push(Check::new(
            "min gap / coarsest gap",
            floor,
            Comparison::AtLeast(e.gap_floor),
        ));
    }
    Ok(Output {
        checks,
        fitted: Vec::new(),
        tables: vec![table],
    })
}

fn region_nodes(grid: &Grid, region: &Region) -> Vec<usize> {
    (0..grid.len())
        .filter(|&n| {
            grid.coords(n)
                .iter()
                .zip(region.lo.iter().zip(&region.hi))
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
        })
        .step_by(region.stride)
        .collect()
}

fn compare(config: &ExperimentConfig, e: &CompareExperiment) -> Result<Output> {
    let grid = base_grid(config)?;
    let region = region_nodes(&grid, &e.region);
    let times = e.times.values();
    let method = method_for(config, grid.len());
    let report = kernel_comparison(
        &config.params,
        &grid,
        boundary(config),
        method,
        e.r_cut,
        &region,
        &times,
        e.stencil_order,
    )?;
    let flat = GrusinParameters::euclidean(config.params.n, config.params.m);
    let control = kernel_comparison(
        &flat,
        &grid,
        boundary(config),
        method,
        e.r_cut,
        &region,
        &times,
        e.stencil_order,
    )?;
    let mut table = Table::new(
        "compare.csv",
        &["t", "exponent", "sup_difference", "reference", "control_difference"],
    );
    for (s, c) in report.samples.iter().zip(&control.samples) {
        table.push(vec![
            s.t.into(),
            s.exponent.into(),
            s.sup_difference.into(),
            s.reference.into(),
            c.sup_difference.into(),
        ]);
    }
    let (t_lo, t_hi) = times
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    Ok(Output {
        checks: vec![
            Check::new("decades of t", (t_hi / t_lo).log10(), Comparison::AtLeast(1.0 - 1e-12)),
            Check::new(
                "slope of log sup|K1 - K2| against rho^2/4t",
                report.slope().unwrap_or(f64::NAN),
                Comparison::AtMost(e.max_slope),
            ),
            Check::new(
                "identical-coefficient control",
                control.max_difference(),
                Comparison::AtMost(e.control_tolerance),
            ),
        ],
        fitted: Vec::new(),
        tables: vec![table],
    })
}

fn wave(config: &ExperimentConfig, e: &WaveExperiment) -> Result<Output> {
    let coeffs = CoefficientField::new(config.params);
    let base = base_grid(config)?;
    let mut out = Output::default();
    if let Some(f) = &e.finite_speed {
        let mut table = Table::new("wave_leakage.csv", &["level", "t", "leaked_fraction", "energy_drift"]);
        let mut leaks = Vec::with_capacity(f.levels);
        let mut grid = base.clone();
        let r2 = f.radius * f.radius;
        for level in 0..f.levels {
            if level > 0 {
                grid = grid.refined();
            }
            let op = DivergenceFormOperator::assemble(&grid, &coeffs, boundary(config))?;
            let dist2 = |x: &[f64]| x.iter().zip(&f.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let set: Vec<usize> = (0..grid.len()).filter(|&n| dist2(&grid.coords(n)) <= r2).collect();
            let field = DistanceField::from_nodes(&coeffs, &grid, &set, f.stencil_order)?;
            let v = op.sample(|x| {
                let q = dist2(x) / r2;
                if q < 1.0 {
                    (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            });
            let samples = finite_speed_check(&op, &field, &v, &f.times.values(), f.epsilon, f.safety)?;
            for s in &samples {
                table.push(vec![
                    level.into(),
                    s.t.into(),
                    s.leaked_fraction.into(),
                    s.energy_drift.into(),
                ]);
            }
            leaks.push(samples.iter().map(|s| s.leaked_fraction).fold(0.0, f64::max));
        }
        out.checks.push(Check::new(
            "leaked fraction on the finest grid",
            *leaks.last().unwrap(),
            Comparison::LessThan(f.leak_tolerance),
        ));
        if leaks.len() > 1 {
            let growth = leaks
                .windows(2)
                .map(|w| if w[1] == 0.0 { 0.0 } else { w[1] / w[0] })
                .fold(0.0, f64::max);
            out.checks.push(Check::new(
                "leak ratio under refinement",
                growth,
                Comparison::LessThan(1.0),
            ));
        }
        out.tables.push(table);
    }
    if let Some(sampling) = &e.davies_gaffney {
        let op = DivergenceFormOperator::assemble(&base, &coeffs, boundary(config))?;
        let semi = Semigroup::new(&op, method_for(config, op.len()))?;
        let sampling = grusin_core::wave::DaviesGaffneySampling {
            seed: config.seed,
            ..*sampling
        };
        let reports = sample_davies_gaffney(&semi, &sampling)?;
        let mut table = Table::new(
            "davies_gaffney.csv",
            &[
                "sample",
                "distance",
                "t",
                "exponent",
                "log_pairing",
                "log_bound",
                "margin",
            ],
        );
        for (i, r) in reports.iter().enumerate() {
            for s in &r.samples {
                table.push(vec![
                    i.into(),
                    r.distance.into(),
                    s.t.into(),
                    s.exponent.into(),
                    s.log_pairing.into(),
                    s.log_bound.into(),
                    s.margin.into(),
                ]);
            }
        }
        let worst = reports.iter().map(|r| r.worst_margin).fold(f64::NEG_INFINITY, f64::max);
        out.checks.push(Check::new(
            "samples drawn",
            reports.len() as f64,
            Comparison::AtLeast(sampling.samples as f64),
        ));
        out.checks.push(Check::new(
            "worst Davies-Gaffney margin",
            worst,
            Comparison::LessThan(0.0),
        ));
        out.tables.push(table);
    }
    Ok(out)
}

fn nash(config: &ExperimentConfig, e: &NashExperiment) -> Result<Output> {
    let params = config.params;
    let spec = MultiplierSpec::new(params, 1.0)?;
    let mut out = Output::default();
    if let Some(n) = &e.nash {
        let coeffs = CoefficientField::new(params);
        let base = base_grid(config)?;
        let mut runs: Vec<(Grid, usize, u64)> = (0..n.repeats as u64)
            .map(|r| (base.clone(), n.ensemble, config.seed + r))
            .collect();
        runs.push((base.clone(), 2 * n.ensemble, config.seed + n.repeats as u64));
        if n.refine {
            runs.push((base.refined(), n.ensemble, config.seed));
        }
        let mut rows = Table::new("nash_rows.csv", &["run", "r", "lhs", "rhs", "margin"]);
        let mut ratios = Table::new("nash_ratios.csv", &["run", "trial", "ratio"]);
        let mut runs_table = Table::new(
            "nash_runs.csv",
            &[
                "run",
                "unknowns",
                "ensemble",
                "seed",
                "fitted_constant",
                "min_margin",
                "reflection_factor",
            ],
        );
        let mut constants = Vec::with_capacity(runs.len());
        for (k, (grid, ensemble, seed)) in runs.iter().enumerate() {
            let op = DivergenceFormOperator::assemble(grid, &coeffs, boundary(config))?;
            let nc = NashConfig {
                ensemble: *ensemble,
                width_range: n.width_range,
                radii: n.radii,
                seed: *seed,
                min_cells: n.min_cells,
            };
            let r = nash_check(&op, &spec, &nc)?;
            for row in &r.rows {
                rows.push(vec![
                    k.into(),
                    row.r.into(),
                    row.lhs.into(),
                    row.rhs.into(),
                    row.margin.into(),
                ]);
            }
            for (i, q) in r.ratios.iter().enumerate() {
                ratios.push(vec![k.into(), i.into(), (*q).into()]);
            }
            runs_table.push(vec![
                k.into(),
                op.len().into(),
                (*ensemble).into(),
                (*seed as usize).into(),
                r.fitted_constant.into(),
                r.min_margin.into(),
                r.reflection_factor.into(),
            ]);
            out.checks.push(Check::new(
                format!("Nash margin (run {k})"),
                r.min_margin,
                Comparison::AtLeast(0.0),
            ));
            constants.push(r.fitted_constant);
        }
        out.fitted.push(FittedConstant::new(
            "domination constant",
            constants,
            n.stability_factor,
        ));
        out.tables.extend([runs_table, rows, ratios]);
    }
    if let Some(v) = &e.vf_slopes {
        let derived = params.derive();
        let mut table = Table::new("vf_volume.csv", &["r", "volume"]);
        for (label, (lo, hi), target) in [("small r", v.small, derived.dp), ("large r", v.large, derived.d)] {
            let radii = geometric_grid(lo, hi, 9);
            let volumes: Vec<f64> = radii
                .iter()
                .map(|&r| vf_volume(&spec, r))
                .collect::<grusin_core::Result<_>>()?;
            for (r, vol) in radii.iter().zip(&volumes) {
                table.push(vec![(*r).into(), (*vol).into()]);
            }
            out.checks.push(Check::new(
                format!("V_F slope, {label}"),
                loglog_slope(&radii, &volumes)?,
                Comparison::Within {
                    target,
                    tolerance: v.tolerance * target,
                },
            ));
        }
        out.tables.push(table);
    }
    if !e.hardy.is_empty() {
        let mut table = Table::new(
            "hardy.csv",
            &["n", "gamma", "fraction", "nodes", "constant", "lambda_min"],
        );
        for h in &e.hardy {
            let r = hardy_check(&HardyConfig {
                n: h.n,
                gamma: h.gamma,
                fraction: h.fraction,
                nodes: h.nodes,
                coarse_nodes: h.coarse_nodes,
            })?;
            table.push(vec![
                h.n.into(),
                h.gamma.into(),
                h.fraction.into(),
                h.nodes.into(),
                r.constant.into(),
                r.lambda_min.into(),
            ]);
            let label = format!("Hardy λ_min (n={}, γ={}, fraction {})", h.n, h.gamma, h.fraction);
            out.checks.push(match h.expect {
                Expectation::Holds => Check::new(label, r.lambda_min, Comparison::AtLeast(-h.tolerance)),
                Expectation::Fails => Check::new(label, r.lambda_min, Comparison::LessThan(0.0)),
            });
        }
        out.tables.push(table);
    }
    if let Some(i) = &e.inequalities {
        let r = operator_inequality_checks(i.trials, i.dim, i.gamma, i.sum_order, config.seed)?;
        let mut table = Table::new(
            "inequalities.csv",
            &["trials", "dim", "gamma", "sum_order", "monotone_worst", "sum_worst"],
        );
        table.push(vec![
            i.trials.into(),
            i.dim.into(),
            i.gamma.into(),
            (i.sum_order as usize).into(),
            r.monotone_worst.into(),
            r.sum_worst.into(),
        ]);
        out.checks.push(Check::new(
            "A(I+A)^-γ monotonicity, worst",
            r.monotone_worst,
            Comparison::AtLeast(-i.tolerance),
        ));
        out.checks.push(Check::new(
            "root-sum inequality, worst",
            r.sum_worst,
            Comparison::AtLeast(-i.tolerance),
        ));
        out.tables.push(table);
    }
    Ok(out)
}
