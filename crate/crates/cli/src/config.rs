//! Experiment configuration, read from TOML.
//!
//! A config names one experiment. Shared sections (`params`, `grid`, `method`)
//! describe the operator; `[experiment]` carries a `kind` tag and the knobs of that
//! kind. See `configs/SCHEMA.md` for the full schema.

use std::path::{Path, PathBuf};

use grusin_core::wave::DaviesGaffneySampling;
use grusin_core::{Boundary, EvolutionMethod, GrusinParameters};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub params: GrusinParameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<EvolutionMethod>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Half-widths `L` of the box `[-L, L]` per axis; a single value is broadcast.
    pub extents: Vec<f64>,
    /// Node counts per axis (odd, so the origin is a node); a single value is broadcast.
    pub nodes: Vec<usize>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_true() -> bool {
    true
}

fn default_boundary() -> Boundary {
    Boundary::NeumannTruncation
}

/// Either an explicit list or a geometric grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Geometric { lo: f64, hi: f64, count: usize },
}

impl TimeGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Geometric { lo, hi, count } => grusin_core::fit::geometric_grid(*lo, *hi, *count),
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        let values = self.values();
        if values.is_empty() {
            return Err(CliError::invalid(field, "needs at least one value"));
        }
        if values.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(CliError::invalid(field, "values must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Distance(DistanceExperiment),
    Volume(VolumeExperiment),
    HeatKernel(HeatKernelExperiment),
    Conservation(ConservationExperiment),
    Decay(DecayExperiment),
    Separation(SeparationExperiment),
    Compare(CompareExperiment),
    Wave(WaveExperiment),
    Nash(NashExperiment),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Distance(_) => "distance",
            Experiment::Volume(_) => "volume",
            Experiment::HeatKernel(_) => "heat-kernel",
            Experiment::Conservation(_) => "conservation",
            Experiment::Decay(_) => "decay",
            Experiment::Separation(_) => "separation",
            Experiment::Compare(_) => "compare",
            Experiment::Wave(_) => "wave",
            Experiment::Nash(_) => "nash",
        }
    }
}

/// Numerical versus closed-form distance on random node pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceExperiment {
    pub sources: usize,
    pub targets_per_source: usize,
    /// Pairs closer than this (Euclidean) are redrawn.
    pub min_separation: f64,
    /// Fraction of each half-axis from which nodes are drawn.
    pub fill: f64,
    pub levels: usize,
    pub stencil_order: usize,
    /// Allowed ratio between band constants of consecutive levels.
    pub stability_factor: f64,
}

impl Default for DistanceExperiment {
    fn default() -> Self {
        Self {
            sources: 10,
            targets_per_source: 10,
            min_separation: 0.3,
            fill: 0.7,
            levels: 3,
            stencil_order: 2,
            stability_factor: 1.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeCenter {
    pub point: Vec<f64>,
    pub radii: TimeGrid,
    /// Expected log–log slope over all radii, checked to `slope_tolerance` (relative).
    #[serde(default)]
    pub expected_slope: Option<f64>,
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
}

fn default_slope_tolerance() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeExperiment {
    pub centers: Vec<VolumeCenter>,
    /// Nodes per axis of each per-radius grid.
    #[serde(default = "default_volume_nodes")]
    pub nodes: usize,
    #[serde(default = "default_stencil")]
    pub stencil_order: usize,
    /// When set, every doubling exponent must stay below `max(D, D') + margin`.
    #[serde(default)]
    pub doubling_margin: Option<f64>,
}

fn default_volume_nodes() -> usize {
    201
}

fn default_stencil() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatKernelExperiment {
    /// Source points; each is snapped to the nearest node.
    pub sources: Vec<Vec<f64>>,
    pub times: TimeGrid,
    /// Write every kernel slice to `heat_kernel.csv`.
    #[serde(default = "default_true")]
    pub kernel_csv: bool,
    /// Compare with the free-space Gauss kernel (constant coefficients only).
    #[serde(default)]
    pub oracle: Option<OracleCheck>,
    /// Fit Gaussian upper and on-diagonal lower constants under refinement.
    #[serde(default)]
    pub bounds: Option<GaussianBoundsCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheck {
    pub tolerance: f64,
    /// Largest admissible `e^{-d(source, ∂)²/4t}`.
    pub tail_guard: f64,
}

impl Default for OracleCheck {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            tail_guard: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianBoundsCheck {
    pub epsilon: f64,
    pub exponent_cap: f64,
    pub levels: usize,
    pub stability_factor: f64,
    pub stencil_order: usize,
}

impl Default for GaussianBoundsCheck {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            exponent_cap: 4.0,
            levels: 3,
            stability_factor: 2.0,
            stencil_order: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConservationExperiment {
    #[serde(default = "default_sources")]
    pub sources: usize,
    pub times: TimeGrid,
    #[serde(default = "default_conservation_tolerance")]
    pub tolerance: f64,
}

fn default_sources() -> usize {
    10
}

fn default_conservation_tolerance() -> f64 {
    1e-8
}

/// Nodes `first, first+1, …` along the first axis, other coordinates at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisNodes {
    pub first: i64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeWindow {
    pub t_lo: f64,
    pub t_hi: f64,
    pub expected: f64,
    /// Absolute tolerance on the slope.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayExperiment {
    pub candidates: AxisNodes,
    pub times: TimeGrid,
    pub windows: Vec<SlopeWindow>,
    /// Times whose boundary weight `e^{-d²/4t}` exceeds this are not fitted.
    #[serde(default = "default_tail_limit")]
    pub tail_limit: f64,
    #[serde(default = "default_stencil")]
    pub stencil_order: usize,
}

fn default_tail_limit() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationExperiment {
    pub levels: usize,
    pub t: f64,
    pub sources: Vec<Vec<f64>>,
    #[serde(default = "default_stencil")]
    pub stencil_order: usize,
    /// Slack allowed when the gap should not grow under refinement.
    #[serde(default = "default_gap_tolerance")]
    pub gap_tolerance: f64,
    /// In the weak regime the gap must stay above this fraction of its coarsest value.
    #[serde(default = "default_gap_floor")]
    pub gap_floor: f64,
}

fn default_gap_tolerance() -> f64 {
    1e-10
}

fn default_gap_floor() -> f64 {
    0.5
}

/// Box of grid nodes `lo ≤ x ≤ hi`, keeping every `stride`-th along the first axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareExperiment {
    pub r_cut: f64,
    pub region: Region,
    pub times: TimeGrid,
    #[serde(default = "default_max_slope")]
    pub max_slope: f64,
    /// Bound on `sup|K₁ - K₂|` when the coefficients are constant.
    #[serde(default = "default_control_tolerance")]
    pub control_tolerance: f64,
    #[serde(default = "default_stencil")]
    pub stencil_order: usize,
}

fn default_max_slope() -> f64 {
    -0.8
}

fn default_control_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveExperiment {
    #[serde(default)]
    pub finite_speed: Option<FiniteSpeedCheck>,
    #[serde(default)]
    pub davies_gaffney: Option<DaviesGaffneySampling>,
}

/// Smooth bump `exp(1 - 1/(1 - |x-c|²/R²))` on the Euclidean disk of radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSpeedCheck {
    pub center: Vec<f64>,
    pub radius: f64,
    pub times: TimeGrid,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_stencil")]
    pub stencil_order: usize,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_leak_tolerance")]
    pub leak_tolerance: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_levels() -> usize {
    3
}

fn default_safety() -> f64 {
    0.5
}

fn default_leak_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NashExperiment {
    #[serde(default)]
    pub nash: Option<NashCheck>,
    #[serde(default)]
    pub vf_slopes: Option<VfSlopes>,
    #[serde(default)]
    pub hardy: Vec<HardyCase>,
    #[serde(default)]
    pub inequalities: Option<InequalityCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NashCheck {
    pub ensemble: usize,
    pub width_range: (f64, f64),
    pub radii: (f64, f64, usize),
    pub min_cells: f64,
    /// Independent ensembles of the base size, plus one of twice the size.
    pub repeats: usize,
    /// Also rerun on the refined grid.
    pub refine: bool,
    pub stability_factor: f64,
}

impl Default for NashCheck {
    fn default() -> Self {
        let base = grusin_core::multipliers::NashConfig::default();
        Self {
            ensemble: base.ensemble,
            width_range: base.width_range,
            radii: base.radii,
            min_cells: base.min_cells,
            repeats: 2,
            refine: true,
            stability_factor: 1.25,
        }
    }
}

/// Slopes of `V_F` on a small-`r` and a large-`r` decade, against `D'` and `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VfSlopes {
    pub small: (f64, f64),
    pub large: (f64, f64),
    pub tolerance: f64,
}

impl Default for VfSlopes {
    fn default() -> Self {
        Self {
            small: (1e-5, 1e-4),
            large: (1e4, 1e5),
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// `λ_min ≥ -tolerance`.
    Holds,
    /// `λ_min < 0`.
    Fails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyCase {
    pub n: usize,
    pub gamma: f64,
    pub fraction: f64,
    #[serde(default = "default_hardy_nodes")]
    pub nodes: usize,
    #[serde(default = "default_hardy_coarse")]
    pub coarse_nodes: usize,
    pub expect: Expectation,
    #[serde(default = "default_hardy_tolerance")]
    pub tolerance: f64,
}

fn default_hardy_nodes() -> usize {
    14
}

fn default_hardy_coarse() -> usize {
    8
}

fn default_hardy_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalityCheck {
    pub trials: usize,
    pub dim: usize,
    pub gamma: f64,
    pub sum_order: u32,
    pub tolerance: f64,
}

impl Default for InequalityCheck {
    fn default() -> Self {
        Self {
            trials: 1000,
            dim: 20,
            gamma: 0.3,
            sum_order: 1,
            tolerance: 1e-10,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.in_file(path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configs serialize")
    }

    /// SHA-256 of the canonical JSON form, so formatting and comments in the
    /// source file do not change it.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("configs serialize");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::invalid(
                "name",
                "must be non-empty and free of path separators",
            ));
        }
        self.params.validate()?;
        if let Some(method) = &self.method {
            method.validate()?;
        }
        if let Some(grid) = &self.grid {
            grid.validate(self.params.dim())?;
        }
        let needs_grid = !matches!(
            self.experiment,
            Experiment::Volume(_) | Experiment::Nash(NashExperiment { nash: None, .. })
        );
        if needs_grid && self.grid.is_none() {
            return Err(CliError::invalid(
                "grid",
                format!("required by `{}` experiments", self.experiment.kind()),
            ));
        }
        match &self.experiment {
            Experiment::Distance(e) => {
                positive_count("experiment.sources", e.sources)?;
                positive_count("experiment.targets_per_source", e.targets_per_source)?;
                positive_count("experiment.levels", e.levels)?;
                unit_interval("experiment.fill", e.fill)?;
                factor("experiment.stability_factor", e.stability_factor)?;
            }
            Experiment::Volume(e) => {
                if e.centers.is_empty() {
                    return Err(CliError::invalid("experiment.centers", "needs at least one centre"));
                }
                for (i, c) in e.centers.iter().enumerate() {
                    if c.point.len() != self.params.dim() {
                        return Err(CliError::invalid(
                            format!("experiment.centers[{i}].point"),
                            format!("expected {} coordinates", self.params.dim()),
                        ));
                    }
                    c.radii.validate(&format!("experiment.centers[{i}].radii"))?;
                }
            }
            Experiment::HeatKernel(e) => {
                e.times.validate("experiment.times")?;
                self.check_points("experiment.sources", &e.sources)?;
                if let Some(b) = &e.bounds {
                    positive_count("experiment.bounds.levels", b.levels)?;
                    factor("experiment.bounds.stability_factor", b.stability_factor)?;
                }
                if e.oracle.is_some() && self.params != GrusinParameters::euclidean(self.params.n, self.params.m) {
                    return Err(CliError::invalid(
                        "experiment.oracle",
                        "the Gauss oracle needs constant coefficients",
                    ));
                }
            }
            Experiment::Conservation(e) => {
                e.times.validate("experiment.times")?;
                positive_count("experiment.sources", e.sources)?;
            }
            Experiment::Decay(e) => {
                e.times.validate("experiment.times")?;
                positive_count("experiment.candidates.count", e.candidates.count)?;
                if e.windows.is_empty() {
                    return Err(CliError::invalid("experiment.windows", "needs at least one fit window"));
                }
            }
            Experiment::Separation(e) => {
                positive_count("experiment.levels", e.levels)?;
                self.check_points("experiment.sources", &e.sources)?;
            }
            Experiment::Compare(e) => {
                e.times.validate("experiment.times")?;
                positive_count("experiment.region.stride", e.region.stride)?;
                for (field, v) in [
                    ("experiment.region.lo", &e.region.lo),
                    ("experiment.region.hi", &e.region.hi),
                ] {
                    if v.len() != self.params.dim() {
                        return Err(CliError::invalid(
                            field,
                            format!("expected {} coordinates", self.params.dim()),
                        ));
                    }
                }
            }
            Experiment::Wave(e) => {
                if let Some(f) = &e.finite_speed {
                    f.times.validate("experiment.finite_speed.times")?;
                    positive_count("experiment.finite_speed.levels", f.levels)?;
                    if f.center.len() != self.params.dim() {
                        return Err(CliError::invalid(
                            "experiment.finite_speed.center",
                            format!("expected {} coordinates", self.params.dim()),
                        ));
                    }
                }
            }
            Experiment::Nash(e) => {
                if let Some(n) = &e.nash {
                    positive_count("experiment.nash.repeats", n.repeats)?;
                    factor("experiment.nash.stability_factor", n.stability_factor)?;
                }
            }
        }
        Ok(())
    }

    fn check_points(&self, field: &str, points: &[Vec<f64>]) -> Result<()> {
        if points.is_empty() {
            return Err(CliError::invalid(field, "needs at least one point"));
        }
        if let Some(i) = points.iter().position(|p| p.len() != self.params.dim()) {
            return Err(CliError::invalid(
                format!("{field}[{i}]"),
                format!("expected {} coordinates", self.params.dim()),
            ));
        }
        Ok(())
    }

    /// Evolution method for an operator with `unknowns` unknowns.
    pub fn method_for(&self, unknowns: usize) -> EvolutionMethod {
        self.method.unwrap_or_else(|| EvolutionMethod::default_for(unknowns))
    }
}

impl GridSpec {
    pub fn extents(&self, dim: usize) -> Vec<f64> {
        broadcast(&self.extents, dim)
    }

    pub fn nodes(&self, dim: usize) -> Vec<usize> {
        broadcast(&self.nodes, dim)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        for (field, len) in [("grid.extents", self.extents.len()), ("grid.nodes", self.nodes.len())] {
            if len != 1 && len != dim {
                return Err(CliError::invalid(field, format!("give 1 or {dim} values, got {len}")));
            }
        }
        if self.extents.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(CliError::invalid("grid.extents", "must be positive"));
        }
        if self.nodes.iter().any(|&n| n < 3 || n % 2 == 0) {
            return Err(CliError::invalid(
                "grid.nodes",
                "node counts must be odd and at least 3",
            ));
        }
        Ok(())
    }
}

fn broadcast<T: Copy>(values: &[T], dim: usize) -> Vec<T> {
    if values.len() == 1 {
        vec![values[0]; dim]
    } else {
        values.to_vec()
    }
}

fn positive_count(field: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(CliError::invalid(field, "must be at least 1"));
    }
    Ok(())
}

fn unit_interval(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(CliError::invalid(field, format!("must lie in (0,1], got {x}")));
    }
    Ok(())
}

fn factor(field: &str, x: f64) -> Result<()> {
    if !(x >= 1.0) {
        return Err(CliError::invalid(field, format!("must be at least 1, got {x}")));
    }
    Ok(())
}

/// Suite manifest: config paths relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_manifest_name")]
    pub name: String,
    #[serde(default)]
    pub configs: Vec<PathBuf>,
}

fn default_manifest_name() -> String {
    "suite".into()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<(Self, Vec<ExperimentConfig>)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let manifest: Self = toml::from_str(&text).map_err(|e| CliError::Parse(e.to_string()).in_file(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let configs = manifest
            .configs
            .iter()
            .map(|p| ExperimentConfig::load(&base.join(p)))
            .collect::<Result<Vec<_>>>()?;
        let mut names: Vec<&str> = configs.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::invalid(
                "configs",
                format!("duplicate experiment name `{}`", w[0]),
            ));
        }
        Ok((manifest, configs))
    }
}

/// Built-in config used when a subcommand runs without `--config`.
pub fn default_config(kind: &str) -> Option<ExperimentConfig> {
    let grid = |extents: f64, nodes: usize| {
        Some(GridSpec {
            extents: vec![extents],
            nodes: vec![nodes],
            boundary: Boundary::NeumannTruncation,
        })
    };
    let base =
        |name: &str, params: GrusinParameters, grid: Option<GridSpec>, experiment: Experiment| ExperimentConfig {
            name: name.into(),
            seed: 0,
            params,
            grid,
            method: None,
            output: None,
            experiment,
        };
    let one_d = GrusinParameters::one_dimensional(0.25, 0.0);
    let config = match kind {
        "conservation" => base(
            "conservation",
            one_d,
            grid(4.0, 201),
            Experiment::Conservation(ConservationExperiment {
                sources: 10,
                times: TimeGrid::List(vec![0.01, 0.1, 0.5, 1.0, 2.0]),
                tolerance: 1e-8,
            }),
        ),
        "distance" => base(
            "distance",
            GrusinParameters::classical(),
            grid(2.0, 41),
            Experiment::Distance(DistanceExperiment::default()),
        ),
        "volume" => {
            let params = GrusinParameters::classical();
            base(
                "volume",
                params,
                None,
                Experiment::Volume(VolumeExperiment {
                    centers: vec![VolumeCenter {
                        point: vec![0.0, 0.0],
                        radii: TimeGrid::Geometric {
                            lo: 0.01,
                            hi: 0.1,
                            count: 8,
                        },
                        expected_slope: Some(params.derive().d),
                        slope_tolerance: 0.1,
                    }],
                    nodes: 101,
                    stencil_order: 2,
                    doubling_margin: Some(0.3),
                }),
            )
        }
        "heat-kernel" => base(
            "heat-kernel",
            GrusinParameters::euclidean(1, 0),
            grid(2.0, 257),
            Experiment::HeatKernel(HeatKernelExperiment {
                sources: vec![vec![0.0], vec![0.25]],
                times: TimeGrid::List(vec![0.05, 0.1]),
                kernel_csv: true,
                oracle: Some(OracleCheck::default()),
                bounds: None,
            }),
        ),
        "decay" => base(
            "decay",
            GrusinParameters::euclidean(1, 0),
            grid(8.0, 801),
            Experiment::Decay(DecayExperiment {
                candidates: AxisNodes { first: 0, count: 4 },
                times: TimeGrid::Geometric {
                    lo: 0.1,
                    hi: 1.0,
                    count: 6,
                },
                windows: vec![SlopeWindow {
                    t_lo: 0.1,
                    t_hi: 1.0,
                    expected: -0.5,
                    tolerance: 0.05,
                }],
                tail_limit: 1e-6,
                stencil_order: 1,
            }),
        ),
        "separation" => base(
            "separation",
            GrusinParameters::one_dimensional(0.75, 0.75),
            grid(4.0, 101),
            Experiment::Separation(SeparationExperiment {
                levels: 3,
                t: 1.0,
                sources: vec![vec![0.5], vec![-1.5], vec![2.0]],
                stencil_order: 2,
                gap_tolerance: 1e-10,
                gap_floor: 0.5,
            }),
        ),
        "compare" => base(
            "compare",
            one_d,
            grid(4.0, 2001),
            Experiment::Compare(CompareExperiment {
                r_cut: 1.0,
                region: Region {
                    lo: vec![2.0],
                    hi: vec![2.5],
                    stride: 5,
                },
                times: TimeGrid::Geometric {
                    lo: 0.13,
                    hi: 1.3,
                    count: 8,
                },
                max_slope: -0.8,
                control_tolerance: 1e-10,
                stencil_order: 2,
            }),
        ),
        "wave" => base(
            "wave",
            GrusinParameters::classical(),
            grid(3.0, 65),
            Experiment::Wave(WaveExperiment {
                finite_speed: None,
                davies_gaffney: Some(DaviesGaffneySampling {
                    samples: 5,
                    ..DaviesGaffneySampling::default()
                }),
            }),
        ),
        "nash" => base(
            "nash",
            GrusinParameters::classical(),
            None,
            Experiment::Nash(NashExperiment {
                nash: None,
                vf_slopes: Some(VfSlopes::default()),
                hardy: Vec::new(),
                inequalities: Some(InequalityCheck {
                    trials: 100,
                    ..InequalityCheck::default()
                }),
            }),
        ),
        _ => return None,
    };
    debug_assert!(config.validate().is_ok(), "default `{kind}` config must validate");
    Some(config)
}
