use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grusin_cli::config::default_config;
use grusin_cli::{run, run_suite, CliError, ExperimentConfig, Manifest, Report};

/// Desk-scale experiments on Grušin-type degenerate operators.
///
/// Every flag can also be set through the environment variable named in its help
/// (prefix `GRUSIN_LAB_`). Exit status: 0 all checks pass, 1 a check failed,
/// 2 invalid config or usage, 3 runtime error.
#[derive(Debug, Parser)]
#[command(name = "grusin-lab", version)]
struct Cli {
    /// Experiment config (TOML); for `suite`, the manifest.
    #[arg(long, global = true, env = "GRUSIN_LAB_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long, global = true, env = "GRUSIN_LAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads shared by all experiments.
    #[arg(long, global = true, env = "GRUSIN_LAB_WORKERS")]
    workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true, env = "GRUSIN_LAB_SEED")]
    seed: Option<u64>,
    /// Print the effective config as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Numerical against closed-form distance under refinement.
    Distance,
    /// Ball volumes, growth exponents and doubling.
    Volume,
    /// Kernel slices, free-space oracle and Gaussian bounds.
    HeatKernel,
    /// Mass conservation of the heat kernel.
    Conservation,
    /// On-diagonal decay exponents.
    Decay,
    /// Weak/strong degeneracy dichotomy.
    Separation,
    /// Kernel comparison with frozen coefficients.
    Compare,
    /// Finite propagation speed and Davies–Gaffney bounds.
    Wave,
    /// Nash, V_F, Hardy and operator inequalities.
    Nash,
    /// Run every config of a manifest concurrently.
    Suite,
    /// Summarise a report.json, or every report under a directory.
    Report { path: PathBuf },
}

impl Command {
    fn kind(&self) -> Option<&'static str> {
        Some(match self {
            Command::Distance => "distance",
            Command::Volume => "volume",
            Command::HeatKernel => "heat-kernel",
            Command::Conservation => "conservation",
            Command::Decay => "decay",
            Command::Separation => "separation",
            Command::Compare => "compare",
            Command::Wave => "wave",
            Command::Nash => "nash",
            Command::Suite | Command::Report { .. } => return None,
        })
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_usage() { 2 } else { 3 })
}

fn status(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(3);
        }
    }
    match &cli.command {
        Command::Report { path } => report(path),
        Command::Suite => suite(&cli),
        command => single(&cli, command.kind().expect("experiment subcommand")),
    }
}

fn single(cli: &Cli, kind: &str) -> ExitCode {
    let mut config = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        },
        None => default_config(kind).expect("every experiment kind has a default"),
    };
    if config.experiment.kind() != kind {
        return fail(&CliError::invalid(
            "experiment.kind",
            format!(
                "config describes a `{}` experiment, not `{kind}`",
                config.experiment.kind()
            ),
        ));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.print_config {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match run(&config, &out) {
        Ok(r) => {
            print!("{}", r.summary());
            status(r.passed)
        }
        Err(e) => fail(&e),
    }
}

fn suite(cli: &Cli) -> ExitCode {
    let Some(path) = &cli.config else {
        return fail(&CliError::invalid("--config", "`suite` needs a manifest"));
    };
    let (manifest, mut configs) = match Manifest::load(path) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = cli.seed {
        configs.iter_mut().for_each(|c| c.seed = seed);
    }
    if cli.print_config {
        for c in &configs {
            println!("# --- {}\n{}", c.name, c.to_toml());
        }
        return ExitCode::SUCCESS;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match run_suite(&manifest.name, &configs, &out) {
        Ok(s) => {
            print!("{}", s.summary());
            status(s.passed)
        }
        Err(e) => fail(&e),
    }
}

fn report(path: &Path) -> ExitCode {
    let mut files = Vec::new();
    if path.is_dir() {
        let Ok(entries) = std::fs::read_dir(path) else {
            return fail(&CliError::invalid("path", format!("cannot read {}", path.display())));
        };
        let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        dirs.sort();
        files.extend(dirs.into_iter().map(|d| d.join("report.json")).filter(|f| f.is_file()));
        if path.join("report.json").is_file() {
            files.push(path.join("report.json"));
        }
    } else {
        files.push(path.to_path_buf());
    }
    if files.is_empty() {
        return fail(&CliError::invalid(
            "path",
            format!("no report.json under {}", path.display()),
        ));
    }
    let mut passed = true;
    for f in files {
        match Report::read_json(&f) {
            Ok(r) => {
                passed &= r.passed;
                print!("{}", r.summary());
            }
            Err(e) => return fail(&e),
        }
    }
    status(passed)
}
