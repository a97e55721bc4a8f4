//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs the configs under `configs/acceptance/` in order and judges the reported
//! values against the tolerances pinned below, not against the tolerances in the
//! TOML files. Time budgets are wall-clock per criterion.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use grusin_cli::{run, ExperimentConfig, Report};

const CONSERVATION_TOL: f64 = 1e-8;
const DECAY_SLOPE_TOL: f64 = 0.15;
const EUCLIDEAN_SLOPE_TOL: f64 = 0.05;
const HALF_LINE_SLOPE_TOL: f64 = 0.1;
const DISTANCE_STABILITY: f64 = 1.25;
const VOLUME_SLOPE_REL: f64 = 0.10;
const DOUBLING_MARGIN: f64 = 0.3;
const GAP_GROWTH_TOL: f64 = 1e-10;
const GAUSSIAN_STABILITY: f64 = 2.0;
const DG_SAMPLES: f64 = 20.0;
const LEAK_TOL: f64 = 1e-6;
const COMPARE_MAX_SLOPE: f64 = -0.8;
const SOLVER_TOL: f64 = 1e-10;
const NASH_STABILITY: f64 = 1.25;
const VF_SLOPE_REL: f64 = 0.05;
const HARDY_TOL: f64 = 1e-8;
const INEQUALITY_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-3;
const SUITE_BUDGET_S: f64 = 30.0 * 60.0;

struct Criterion {
    id: u32,
    title: &'static str,
    configs: &'static [&'static str],
    budget_s: f64,
    judge: fn(&[Report]) -> Vec<Verdict>,
}

struct Verdict {
    what: String,
    ok: bool,
}

fn verdict(what: impl Into<String>, ok: bool) -> Verdict {
    Verdict { what: what.into(), ok }
}

/// Value of the first check whose name starts with `prefix`.
fn value(report: &Report, prefix: &str) -> f64 {
    report
        .checks
        .iter()
        .find(|c| c.name.starts_with(prefix))
        .map_or(f64::NAN, |c| c.value)
}

fn values<'a>(report: &'a Report, prefix: &'a str) -> impl Iterator<Item = f64> + 'a {
    report
        .checks
        .iter()
        .filter(move |c| c.name.starts_with(prefix))
        .map(|c| c.value)
}

fn stability(report: &Report, name: &str) -> f64 {
    report
        .fitted
        .iter()
        .find(|f| f.name == name)
        .map_or(f64::NAN, |f| f.stability)
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "conservation",
            configs: &["c01-conservation-1d", "c01-conservation-2d"],
            budget_s: 10.0,
            judge: |rs| {
                rs.iter()
                    .map(|r| {
                        let v = value(r, "max |1 - Σ w K_t|");
                        verdict(
                            format!("{}: max dev {v:.2e} ≤ {CONSERVATION_TOL:e}", r.name),
                            v <= CONSERVATION_TOL,
                        )
                    })
                    .collect()
            },
        },
        Criterion {
            id: 2,
            title: "on-diagonal decay",
            configs: &["c02-decay-classical", "c02-decay-euclidean"],
            budget_s: 600.0,
            judge: |rs| {
                let target = -rs[0].derived.d / 2.0;
                let g = value(&rs[0], "log-log slope");
                let e = value(&rs[1], "log-log slope");
                vec![
                    verdict(
                        format!("Grušin slope {g:.3} = {target} ± {DECAY_SLOPE_TOL}"),
                        within(g, target, DECAY_SLOPE_TOL),
                    ),
                    verdict(
                        format!("Euclidean slope {e:.3} = -1 ± {EUCLIDEAN_SLOPE_TOL}"),
                        within(e, -1.0, EUCLIDEAN_SLOPE_TOL),
                    ),
                ]
            },
        },
        Criterion {
            id: 3,
            title: "1-D half-line decay",
            configs: &["c03-halfline-small-t", "c03-halfline-large-t"],
            budget_s: 60.0,
            judge: |rs| {
                let p = &rs[0].config.params;
                let small_target = -1.0 / (2.0 * (1.0 - p.delta1));
                let large_target = -1.0 / (2.0 * (1.0 - rs[1].config.params.delta1p));
                let s = value(&rs[0], "log-log slope");
                let l = value(&rs[1], "log-log slope");
                vec![
                    verdict(
                        format!("small-t slope {s:.3} = {small_target} ± {HALF_LINE_SLOPE_TOL}"),
                        within(s, small_target, HALF_LINE_SLOPE_TOL),
                    ),
                    verdict(
                        format!("large-t slope {l:.3} = {large_target} ± {HALF_LINE_SLOPE_TOL}"),
                        within(l, large_target, HALF_LINE_SLOPE_TOL),
                    ),
                ]
            },
        },
        Criterion {
            id: 4,
            title: "distance equivalence",
            configs: &["c04-distance-classical", "c04-distance-general"],
            budget_s: 120.0,
            judge: |rs| {
                rs.iter()
                    .map(|r| {
                        let a = value(r, "finest band constant");
                        let s = stability(r, "band constant a");
                        let finite = value(r, "all ratios finite") >= 1.0;
                        verdict(
                            format!(
                                "{}: a = {a:.3}, refinement factor {s:.3} ≤ {DISTANCE_STABILITY}",
                                r.name
                            ),
                            finite && a.is_finite() && s <= DISTANCE_STABILITY,
                        )
                    })
                    .collect()
            },
        },
        Criterion {
            id: 5,
            title: "ball-volume regimes",
            configs: &["c05-volume-classical", "c05-volume-general"],
            budget_s: 120.0,
            judge: |rs| {
                let mut out = Vec::new();
                for r in rs {
                    let p = &r.config.params;
                    let slopes: Vec<f64> = values(r, "volume slope").collect();
                    let (origin, off) = (slopes[0], slopes[1]);
                    let d = r.derived.d;
                    let e = (p.n + p.m) as f64;
                    out.push(verdict(
                        format!("{}: origin slope {origin:.3} = D = {d:.3} ± 10%", r.name),
                        within(origin, d, VOLUME_SLOPE_REL * d),
                    ));
                    out.push(verdict(
                        format!("{}: off-origin slope {off:.3} = n+m = {e} ± 10%", r.name),
                        within(off, e, VOLUME_SLOPE_REL * e),
                    ));
                }
                out
            },
        },
        Criterion {
            id: 6,
            title: "volume doubling",
            configs: &["c06-doubling-classical", "c06-doubling-general"],
            budget_s: 60.0,
            judge: |rs| {
                rs.iter()
                    .map(|r| {
                        let bound = r.derived.d.max(r.derived.dp) + DOUBLING_MARGIN;
                        let worst = values(r, "doubling exponent").fold(f64::NEG_INFINITY, f64::max);
                        verdict(
                            format!("{}: max exponent {worst:.3} ≤ {bound:.3}", r.name),
                            worst <= bound,
                        )
                    })
                    .collect()
            },
        },
        Criterion {
            id: 7,
            title: "separation dichotomy",
            configs: &["c07-separation-strong", "c07-separation-weak"],
            budget_s: 300.0,
            judge: |rs| {
                let cross = value(&rs[0], "max cross-kernel");
                let growth = value(&rs[0], "largest gap increase");
                let weak_cross = value(&rs[1], "min cross-kernel");
                let floor = value(&rs[1], "min gap / coarsest gap");
                vec![
                    verdict(format!("δ₁=0.75 cross-kernel {cross:e} = 0"), cross == 0.0),
                    verdict(
                        format!("δ₁=0.75 gap growth {growth:.1e} ≤ {GAP_GROWTH_TOL:e}"),
                        growth <= GAP_GROWTH_TOL,
                    ),
                    verdict(format!("δ₁=0.25 cross-kernel {weak_cross:.2e} > 0"), weak_cross > 0.0),
                    verdict(
                        format!("δ₁=0.25 gap ratio {floor:.3} bounded below"),
                        floor > 0.0 && floor.is_finite(),
                    ),
                ]
            },
        },
        Criterion {
            id: 8,
            title: "Gaussian bounds",
            configs: &["c08-gaussian-1d", "c08-gaussian-2d"],
            budget_s: 300.0,
            judge: |rs| {
                let mut out = Vec::new();
                for r in rs {
                    let eps = match &r.config.experiment {
                        grusin_cli::config::Experiment::HeatKernel(h) => {
                            h.bounds.as_ref().map_or(f64::NAN, |b| b.epsilon)
                        }
                        _ => f64::NAN,
                    };
                    let a_ok = values(r, "upper constant finite").all(|a| a.is_finite() && a > 0.0);
                    let b_ok = values(r, "lower constant b > 0").all(|b| b > 0.0);
                    let sa = stability(r, "Gaussian upper constant a");
                    let sb = stability(r, "on-diagonal lower constant b");
                    out.push(verdict(
                        format!(
                            "{}: a finite, stable ×{sa:.2} ≤ {GAUSSIAN_STABILITY} (ε = {eps})",
                            r.name
                        ),
                        a_ok && sa <= GAUSSIAN_STABILITY && eps == 0.1,
                    ));
                    out.push(verdict(
                        format!("{}: b > 0, stable ×{sb:.2} ≤ {GAUSSIAN_STABILITY}", r.name),
                        b_ok && sb <= GAUSSIAN_STABILITY,
                    ));
                }
                out
            },
        },
        Criterion {
            id: 9,
            title: "Davies-Gaffney",
            configs: &["c09-davies-gaffney-classical", "c09-davies-gaffney-general"],
            budget_s: 120.0,
            judge: |rs| {
                rs.iter()
                    .map(|r| {
                        let n = value(r, "samples drawn");
                        let m = value(r, "worst Davies-Gaffney margin");
                        verdict(
                            format!("{}: {n} samples, worst margin {m:.3} < 0", r.name),
                            n >= DG_SAMPLES && m < 0.0,
                        )
                    })
                    .collect()
            },
        },
        Criterion {
            id: 10,
            title: "finite propagation speed",
            configs: &["c10-finite-speed-classical", "c10-finite-speed-general"],
            budget_s: 300.0,
            judge: |rs| {
                rs.iter()
                    .map(|r| {
                        let leak = value(r, "leaked fraction on the finest grid");
                        let ratio = value(r, "leak ratio under refinement");
                        verdict(
                            format!(
                                "{}: leak {leak:.2e} < {LEAK_TOL:e}, refinement ratio {ratio:.3} < 1",
                                r.name
                            ),
                            leak < LEAK_TOL && ratio < 1.0,
                        )
                    })
                    .collect()
            },
        },
        Criterion {
            id: 11,
            title: "kernel comparison",
            configs: &["c11-compare"],
            budget_s: 300.0,
            judge: |rs| {
                let decades = value(&rs[0], "decades of t");
                let slope = value(&rs[0], "slope of log");
                let control = value(&rs[0], "identical-coefficient control");
                vec![
                    verdict(
                        format!("slope {slope:.3} ≤ {COMPARE_MAX_SLOPE} over {decades:.2} decade(s)"),
                        slope <= COMPARE_MAX_SLOPE && decades >= 1.0 - 1e-12,
                    ),
                    verdict(format!("control {control:.1e} ≤ {SOLVER_TOL:e}"), control <= SOLVER_TOL),
                ]
            },
        },
        Criterion {
            id: 12,
            title: "Nash and multipliers",
            configs: &["c12-nash-classical", "c12-nash-general", "c12-nash-half-line"],
            budget_s: 180.0,
            judge: |rs| {
                let mut out = Vec::new();
                for r in rs {
                    if r.fitted.iter().any(|f| f.name == "domination constant") {
                        let s = stability(r, "domination constant");
                        let margin = values(r, "Nash margin").fold(f64::INFINITY, f64::min);
                        out.push(verdict(
                            format!(
                                "{}: constant stable ×{s:.3} ≤ {NASH_STABILITY}, min margin {margin:.3} ≥ 0",
                                r.name
                            ),
                            s <= NASH_STABILITY && margin >= 0.0,
                        ));
                    }
                    let small = value(r, "V_F slope, small r");
                    let large = value(r, "V_F slope, large r");
                    if small.is_finite() {
                        let (dp, d) = (r.derived.dp, r.derived.d);
                        out.push(verdict(
                            format!(
                                "{}: V_F slopes {small:.3}/{large:.3} vs D'={dp:.3}/D={d:.3} ± 5%",
                                r.name
                            ),
                            within(small, dp, VF_SLOPE_REL * dp) && within(large, d, VF_SLOPE_REL * d),
                        ));
                    }
                }
                out
            },
        },
        Criterion {
            id: 13,
            title: "Hardy and operator inequalities",
            configs: &["c13-hardy-inequalities"],
            budget_s: 60.0,
            judge: |rs| {
                let hardy: Vec<f64> = values(&rs[0], "Hardy λ_min").collect();
                let mono = value(&rs[0], "A(I+A)^-γ monotonicity");
                let sum = value(&rs[0], "root-sum inequality");
                let trials = match &rs[0].config.experiment {
                    grusin_cli::config::Experiment::Nash(n) => n.inequalities.as_ref().map_or(0, |i| i.trials),
                    _ => 0,
                };
                vec![
                    verdict(
                        format!("half-optimal λ_min {:.3} ≥ -{HARDY_TOL:e}", hardy[0]),
                        hardy[0] >= -HARDY_TOL,
                    ),
                    verdict(format!("4× optimal λ_min {:.3} < 0", hardy[1]), hardy[1] < 0.0),
                    verdict(
                        format!("{trials} pairs: worst {mono:.2e}, {sum:.2e} ≥ -{INEQUALITY_TOL:e}"),
                        trials >= 1000 && mono >= -INEQUALITY_TOL && sum >= -INEQUALITY_TOL,
                    ),
                ]
            },
        },
        Criterion {
            id: 14,
            title: "free-space oracle",
            configs: &["c14-oracle-1d", "c14-oracle-2d"],
            budget_s: 30.0,
            judge: |rs| {
                rs.iter()
                    .map(|r| {
                        let e = value(r, "sup |K_t - Gauss|");
                        let h = r
                            .config
                            .grid
                            .as_ref()
                            .map_or(f64::NAN, |g| 2.0 * g.extents[0] / (g.nodes[0] - 1) as f64);
                        verdict(
                            format!("{}: sup error {e:.2e} < {ORACLE_TOL:e} at h = 1/{:.0}", r.name, 1.0 / h),
                            e < ORACLE_TOL && (h - 1.0 / 64.0).abs() < 1e-12,
                        )
                    })
                    .collect()
            },
        },
    ]
}

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance")
}

fn main() -> ExitCode {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let out = tempfile::tempdir().expect("temporary output directory");
    let suite_start = Instant::now();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria() {
        if !filter.is_empty() && !filter.contains(&c.id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let reports: Result<Vec<Report>, String> = c
            .configs
            .iter()
            .map(|name| {
                let path = config_dir().join(format!("{name}.toml"));
                let config = ExperimentConfig::load(&path).map_err(|e| e.to_string())?;
                run(&config, out.path()).map_err(|e| format!("{name}: {e}"))
            })
            .collect();
        let elapsed = start.elapsed().as_secs_f64();
        let (ok, detail) = match reports {
            Ok(rs) => {
                let verdicts = (c.judge)(&rs);
                let ok = verdicts.iter().all(|v| v.ok);
                let text = verdicts
                    .iter()
                    .map(|v| {
                        if v.ok {
                            v.what.clone()
                        } else {
                            format!("[x] {}", v.what)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("; ");
                (ok, text)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= c.budget_s;
        let ok = ok && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {}: {detail} ({elapsed:.1} s{} {:.0} s)",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            if in_time { " ≤" } else { " > budget" },
            c.budget_s
        );
    }
    let total = suite_start.elapsed().as_secs_f64();
    if filter.is_empty() {
        let ok = total <= SUITE_BUDGET_S;
        if !ok {
            failed += 1;
        }
        println!(
            "{} suite: {} of {ran} criteria passed in {total:.1} s (budget {SUITE_BUDGET_S:.0} s)",
            if ok { "PASS" } else { "FAIL" },
            ran - failed.min(ran)
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
