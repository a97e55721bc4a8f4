//! Configuration-driven runner for the `grusin-core` experiments.
//!
//! [`run`] executes one [`ExperimentConfig`] and writes `<out>/<name>/` with one
//! CSV per table and `report.json`; [`run_suite`] runs a manifest concurrently.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{ExperimentConfig, Manifest};
pub use error::{CliError, Result};
pub use report::{Check, Comparison, FittedConstant, Report, SuiteReport};

/// Runs the experiment without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<(Report, Vec<csv::Table>)> {
    config.validate()?;
    let start = Instant::now();
    let output = experiments::execute(config)?;
    let mut checks = output.checks;
    checks.extend(output.fitted.iter().map(FittedConstant::check));
    let passed = checks.iter().all(|c| c.passed);
    let report = Report {
        name: config.name.clone(),
        kind: config.experiment.kind().to_string(),
        config_sha256: config.sha256(),
        config: config.clone(),
        derived: config.params.derive(),
        checks,
        fitted: output.fitted,
        csv_files: output.tables.iter().map(|t| t.file.clone()).collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
        passed,
    };
    Ok((report, output.tables))
}

/// Runs the experiment and writes its CSV files and `report.json` under `out/<name>/`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Report> {
    let (report, tables) = execute(config)?;
    let dir = out.join(&config.name);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    for table in &tables {
        table.write(&dir, &report.config_sha256)?;
    }
    report.write_json(&dir.join("report.json"))?;
    Ok(report)
}

/// Runs all configs concurrently on the current rayon pool and writes
/// `out/suite_report.json`. A config that errors counts as a failure.
pub fn run_suite(name: &str, configs: &[ExperimentConfig], out: &Path) -> Result<SuiteReport> {
    let start = Instant::now();
    let results: Vec<(String, Result<Report>)> = configs.par_iter().map(|c| (c.name.clone(), run(c, out))).collect();
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (name, r) in results {
        match r {
            Ok(report) => reports.push(report),
            Err(e) => errors.push((name, e.to_string())),
        }
    }
    let suite = SuiteReport {
        name: name.to_string(),
        passed: errors.is_empty() && reports.iter().all(|r| r.passed),
        reports,
        errors,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join("suite_report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&suite)? + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(suite)
}
