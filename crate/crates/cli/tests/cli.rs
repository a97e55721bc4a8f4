use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use grusin_cli::ExperimentConfig;

fn lab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grusin-lab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GRUSIN_LAB_CONFIG")
        .env_remove("GRUSIN_LAB_OUT")
        .env_remove("GRUSIN_LAB_SEED")
        .env_remove("GRUSIN_LAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const SMALL: &str = r#"
name = "small"
seed = 3
params = { n = 1, m = 0, delta1 = 0.25, delta1p = 0.0 }
grid = { extents = [2.0], nodes = [41] }

[experiment]
kind = "conservation"
sources = 3
times = [0.1, 0.5]
tolerance = 1e-8
"#;

#[test]
fn out_of_range_delta_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        SMALL.replace("delta1 = 0.25", "delta1 = 1.2"),
    )
    .unwrap();
    let out = lab(&["conservation", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("params.delta1"), "{err}");
    assert!(err.contains("[0,1)"), "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let err = ExperimentConfig::from_toml(&SMALL.replace("seed = 3", "seed = 3\nsede = 4")).unwrap_err();
    assert!(err.to_string().contains("sede"), "{err}");
}

#[test]
fn even_node_count_is_rejected() {
    let err = ExperimentConfig::from_toml(&SMALL.replace("[41]", "[40]")).unwrap_err();
    assert!(err.to_string().contains("grid.nodes"), "{err}");
}

#[test]
fn mismatched_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = lab(&["decay", "--config", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_manifest_passes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.toml"), "name = \"empty\"\nconfigs = []\n").unwrap();
    let out = lab(&["suite", "--config", "m.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(dir.path().join("o/suite_report.json").is_file());
}

#[test]
fn failing_check_is_listed_in_suite_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("good.toml"), SMALL).unwrap();
    let strict = SMALL
        .replace("name = \"small\"", "name = \"strict\"")
        .replace("tolerance = 1e-8", "tolerance = 0.0");
    fs::write(dir.path().join("strict.toml"), strict).unwrap();
    fs::write(
        dir.path().join("m.toml"),
        "configs = [\"good.toml\", \"strict.toml\"]\n",
    )
    .unwrap();
    let out = lab(&["suite", "--config", "m.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("strict"), "{stdout}");
    assert!(stdout.contains("max |1 - Σ w K_t|"), "{stdout}");
}

#[test]
fn csv_output_is_deterministic_and_hashed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    for o in ["a", "b"] {
        let out = lab(&["conservation", "--config", "c.toml", "--out", o], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    }
    let a = fs::read(dir.path().join("a/small/conservation.csv")).unwrap();
    let b = fs::read(dir.path().join("b/small/conservation.csv")).unwrap();
    assert_eq!(a, b);
    let sha = ExperimentConfig::from_toml(SMALL).unwrap().sha256();
    let first = text(&a).lines().next().unwrap().to_string();
    assert_eq!(first, format!("# config_sha256={sha}"));
}

#[test]
fn seed_override_changes_sources() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    lab(&["conservation", "--config", "c.toml", "--out", "a"], dir.path());
    lab(
        &["conservation", "--config", "c.toml", "--out", "b", "--seed", "99"],
        dir.path(),
    );
    let a = fs::read_to_string(dir.path().join("a/small/conservation.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("b/small/conservation.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn default_conservation_run_passes_and_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["conservation", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report = lab(&["report", "o"], dir.path());
    assert_eq!(report.status.code(), Some(0));
    assert!(text(&report.stdout).contains("PASS"), "{}", text(&report.stdout));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["volume", "--print-config"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let parsed = ExperimentConfig::from_toml(&text(&out.stdout)).unwrap();
    assert_eq!(parsed.experiment.kind(), "volume");
}
