//! Machine-readable results: per-check values with their tolerances, fitted
//! constants across refinement levels, and timings.

use std::path::Path;

use grusin_core::DerivedExponents;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op", content = "bound")]
pub enum Comparison {
    AtMost(f64),
    LessThan(f64),
    AtLeast(f64),
    GreaterThan(f64),
    /// `|value - target| ≤ tolerance`.
    Within {
        target: f64,
        tolerance: f64,
    },
}

impl Comparison {
    pub fn holds(&self, value: f64) -> bool {
        match *self {
            Comparison::AtMost(b) => value <= b,
            Comparison::LessThan(b) => value < b,
            Comparison::AtLeast(b) => value >= b,
            Comparison::GreaterThan(b) => value > b,
            Comparison::Within { target, tolerance } => (value - target).abs() <= tolerance,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Comparison::AtMost(b) => format!("≤ {b:e}"),
            Comparison::LessThan(b) => format!("< {b:e}"),
            Comparison::AtLeast(b) => format!("≥ {b:e}"),
            Comparison::GreaterThan(b) => format!("> {b:e}"),
            Comparison::Within { target, tolerance } => format!("= {target} ± {tolerance}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: Comparison,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: Comparison) -> Self {
        Self {
            name: name.into(),
            value,
            passed: tolerance.holds(value),
            tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Comparison::AtLeast(1.0))
    }
}

/// A constant fitted on successive refinement levels (or repeated ensembles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub name: String,
    pub values: Vec<f64>,
    /// `max / min` over all values.
    pub stability: f64,
    pub allowed_factor: f64,
}

impl FittedConstant {
    pub fn new(name: impl Into<String>, values: Vec<f64>, allowed_factor: f64) -> Self {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let stability = if values.is_empty() {
            1.0
        } else if lo > 0.0 && hi.is_finite() {
            hi / lo
        } else {
            f64::INFINITY
        };
        Self {
            name: name.into(),
            values,
            stability,
            allowed_factor,
        }
    }

    pub fn check(&self) -> Check {
        Check::new(
            format!("{} stability", self.name),
            self.stability,
            Comparison::AtMost(self.allowed_factor),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub kind: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub derived: DerivedExponents,
    pub checks: Vec<Check>,
    pub fitted: Vec<FittedConstant>,
    pub csv_files: Vec<String>,
    pub wall_seconds: f64,
    pub passed: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{} [{}] {} ({:.2} s)\n",
            self.name,
            self.kind,
            if self.passed { "PASS" } else { "FAIL" },
            self.wall_seconds
        );
        for c in &self.checks {
            out.push_str(&format!(
                "  {} {}: {:.6e} {}\n",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance.describe()
            ));
        }
        out
    }
}

/// Aggregate of a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub reports: Vec<Report>,
    /// Experiments that could not run, with their error messages.
    pub errors: Vec<(String, String)>,
    pub wall_seconds: f64,
}

impl SuiteReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&r.summary());
        }
        for (name, err) in &self.errors {
            out.push_str(&format!("{name} ERROR: {err}\n"));
        }
        let failed: Vec<&str> = self
            .reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name.as_str())
            .chain(self.errors.iter().map(|e| e.0.as_str()))
            .collect();
        out.push_str(&format!(
            "suite {}: {} of {} experiments passed ({:.1} s)\n",
            self.name,
            self.reports.len() + self.errors.len() - failed.len(),
            self.reports.len() + self.errors.len(),
            self.wall_seconds
        ));
        if !failed.is_empty() {
            out.push_str(&format!("failed: {}\n", failed.join(", ")));
        }
        out
    }
}
