//! Batch front-end for the Stefan toolkit: JSON configs in, run directories
//! with CSV fields, `manifest.json` and `report.json` out.
//!
//! Exit codes: 0 when every hard check passes, 2 for usage errors, 3 for
//! numerical failures (including failed hard checks), 4 for I/O errors.

pub mod benchmark;
pub mod compare;
pub mod config;
pub mod error;
pub mod mollify;
pub mod rundir;
pub mod solve;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use stefan_core::RunReport;

use crate::config::{parse_config, ExperimentConfig, FieldSource, Mode, MollifyConfig, VerifyConfig};
use crate::error::{CliError, CliResult};
use crate::rundir::Sink;

#[derive(Parser, Debug)]
#[command(name = "stefan", version, about = "One-phase Stefan problem solvers and diagnostics")]
struct Cli {
    /// Suppress the per-check summary on standard error.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (JSON): a full config with `mode`, or the bare section.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, or a `.json` file for the report alone.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomised suites; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-phase (optionally two-phase) 1D Stefan problem.
    Solve1d(Common),
    /// 3D Stefan problem with a graph front.
    Solve3d(Common),
    /// Mollify a field.
    Mollify {
        #[command(flatten)]
        common: Common,
        /// Field CSV; builds a config when `--config` is absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Highest derivative order to report.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Diagnostic suite, or checks over a finished run with `--run`.
    Verify {
        #[command(flatten)]
        common: Common,
        /// `all` or a comma-separated list of check names.
        #[arg(long, default_value = "all")]
        checks: String,
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Convergence study on the similarity problem.
    Benchmark(Common),
    /// Per-file differences between two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        /// Where to write the difference report; printed when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common, mode: Mode) -> CliResult<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            parse_config(&text, mode)?
        }
        None => ExperimentConfig::new(mode),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

fn sink(config: &ExperimentConfig) -> CliResult<Sink> {
    Sink::open(config.out.as_deref())
}


fn write_report(report: &RunReport, out: Option<&Path>) -> CliResult<()> {
    match out {
        None => {
            use std::io::Write;
            std::io::stdout().write_all(report.to_json().as_bytes())?;
        }
        Some(p) => {
            let path = if p.extension().is_some_and(|e| e == "json") { p.to_path_buf() } else { p.join(rundir::REPORT) };
            if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, report.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn execute(command: Command) -> CliResult<RunReport> {
    match command {
        Command::Solve1d(common) => {
            let config = load(&common, Mode::Solve1d)?;
            config.check()?;
            solve::solve1d(&config, sink(&config)?)
        }
        Command::Solve3d(common) => {
            let config = load(&common, Mode::Solve3d)?;
            config.check()?;
            solve::solve3d(&config, sink(&config)?)
        }
        Command::Mollify { common, input, epsilon, order } => {
            let mut config = load(&common, Mode::Mollify)?;
            if config.mollify.is_none() {
                let (Some(path), Some(epsilon)) = (input.clone(), epsilon) else {
                    return Err(CliError::Usage("mollify: give --config, or --input with --epsilon".into()));
                };
                config.mollify = Some(MollifyConfig {
                    epsilon,
                    samples_per_radius: stefan_core::mollifier::DEFAULT_SAMPLES_PER_RADIUS,
                    extension: stefan_core::Extension::Restrict,
                    order: 2,
                    field: FieldSource::Csv { path, origin: None },
                    epsilons: Vec::new(),
                });
            }
            let m = config.mollify.as_mut().expect("set above");
            if let Some(path) = input {
                m.field = FieldSource::Csv { path, origin: None };
            }
            if let Some(e) = epsilon {
                m.epsilon = e;
            }
            if let Some(o) = order {
                m.order = o;
            }
            config.check()?;
            mollify::mollify(&config, sink(&config)?)
        }
        Command::Verify { common, checks, run } => {
            let config = load(&common, Mode::Verify)?;
            config.check()?;
            match run {
                Some(dir) => {
                    let mut report = verify::run_checks(&dir, &checks)?;
                    report.provenance.version = env!("CARGO_PKG_VERSION").to_string();
                    report.provenance.config_sha256 = config.sha256();
                    report.provenance.seed = Some(config.seed);
                    write_report(&report, config.out.as_deref())?;
                    Ok(report)
                }
                None => {
                    let selected = verify::select_checks(&checks, &verify::SUITE_CHECKS)?;
                    let cfg = config.verify.clone().unwrap_or_else(VerifyConfig::default);
                    let mut report = verify::suite(&cfg, config.seed, &selected)?;
                    let manifest = rundir::Manifest::new(&config);
                    sink(&config)?.finish(Some(manifest), &mut report, &config)?;
                    Ok(report)
                }
            }
        }
        Command::Benchmark(common) => {
            let config = load(&common, Mode::Benchmark)?;
            config.check()?;
            benchmark::benchmark(&config, sink(&config)?)
        }
        Command::Compare { a, b, abs_tol, rel_tol, out } => {
            let report = compare::compare_runs(&a, &b, compare::Tolerances { abs: abs_tol, rel: rel_tol })?;
            write_report(&report, out.as_deref())?;
            Ok(report)
        }
    }
}

fn summarize(report: &RunReport) {
    for (name, d) in &report.diagnostics {
        let status = match (d.pass, d.hard) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "fail (soft)",
        };
        eprintln!("{status:>11}  {name}: measured {:.6e}, tolerance {:.6e}", d.measured, d.tolerance);
    }
    if let Some(f) = &report.failure {
        eprintln!("run stopped early: {f}");
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(report) => {
            if !cli.quiet {
                summarize(&report);
            }
            if report.passed() {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("stefan: {e}");
            e.exit_code()
        }
    }
}
