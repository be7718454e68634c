use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mannlab::commands::{self, AnchorReport, TheoremChoice};
use mannlab::output::{ensure_dir, to_json, write_json};
use mannlab::{CliError, Log, RunConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mannlab", version, about = "Modified Mann iteration laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (default: config `output.dir`, then $MANNLAB_OUT).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the config iteration cap.
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
    /// Suppress progress lines on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate, certify, compute the anchor limit and iterate.
    Run(Common),
    /// One run per entry of the config's `sweep` array, plus a comparison table.
    Sweep(Common),
    /// Sample the strict-pseudocontraction inequality.
    Certify {
        #[command(flatten)]
        common: Common,
        /// λ to test (default: the operator's claimed λ).
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Check the schedules against a set of convergence conditions.
    ValidateSchedule {
        #[command(flatten)]
        common: Common,
        /// theorem31, theorem32, zhou, chai_song or all.
        #[arg(long, default_value = "theorem31")]
        theorem: TheoremChoice,
        /// Horizon for finite checks (default: max_iter).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Compute the τ-sequence of a numeric sequence and check its estimates.
    TauAnalyze {
        /// JSON array, or numbers separated by commas or whitespace.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Solve the anchor equation at one t, or follow it to its limit.
    Anchor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<f64>,
    },
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os("MANNLAB_OUT").map(PathBuf::from)
}

fn load(common: &Common) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(n) = common.max_iter {
        cfg.max_iter = n;
    }
    let out = commands::resolve_out(common.out.clone(), Some(&cfg), env_out());
    Ok((cfg, out))
}

/// Writes `value` to `dir/name` when a directory is known, else to stdout.
fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>, name: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_json(value, &dir.join(name))
        }
        None => {
            print!("{}", to_json(value)?);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, out) = load(&common)?;
            let out = out.unwrap_or_else(|| PathBuf::from("mannlab-out"));
            let log = Log::new(common.quiet);
            let start = Instant::now();
            commands::cmd_run(&cfg, Some(&out), &log)?;
            write_timing(&out, start, &log)
        }
        Command::Sweep(common) => {
            let (cfg, out) = load(&common)?;
            let out = out.unwrap_or_else(|| PathBuf::from("mannlab-out"));
            let log = Log::new(common.quiet);
            let start = Instant::now();
            commands::cmd_sweep(&cfg, Some(&out), &log)?;
            write_timing(&out, start, &log)
        }
        Command::Certify { common, lambda } => {
            let (cfg, out) = load(&common)?;
            let cert = commands::cmd_certify(&cfg, lambda, &Log::new(common.quiet))?;
            emit(&cert, out.as_ref(), "certificate.json")?;
            if cert.is_certified() {
                Ok(())
            } else {
                Err(CliError::Validation(format!(
                    "{} refuted at lambda {}",
                    cert.operator, cert.lambda_tested
                )))
            }
        }
        Command::ValidateSchedule {
            common,
            theorem,
            horizon,
        } => {
            let (cfg, out) = load(&common)?;
            let reports = commands::cmd_validate(&cfg, theorem, horizon)?;
            emit(&reports, out.as_ref(), "verdicts.json")?;
            let failed: Vec<String> = reports
                .iter()
                .flat_map(|r| r.failed().map(move |c| format!("{} {}", r.theorem, c.condition)))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Validation(format!("failed: {}", failed.join(", "))))
            }
        }
        Command::TauAnalyze { input, out, quiet } => {
            let outcome = commands::cmd_tau(&input)?;
            let out = out.or_else(env_out);
            emit(&outcome, out.as_ref(), "tau.json")?;
            match outcome {
                mannlab_core::iteration::TauOutcome::Analysis(a) if !a.all_pass() => {
                    Err(CliError::Validation("tau estimates failed".into()))
                }
                mannlab_core::iteration::TauOutcome::Monotone => {
                    Log::new(quiet).line("sequence is nonincreasing; no ascent to analyze");
                    Ok(())
                }
                _ => Ok(()),
            }
        }
        Command::Anchor { common, t } => {
            let (cfg, out) = load(&common)?;
            let report = commands::cmd_anchor(&cfg, t)?;
            if let AnchorReport::Limit { limit, .. } = &report {
                Log::new(common.quiet).line(format!(
                    "z = {:?} (extrapolation gap {:e})",
                    limit.z.as_slice(),
                    limit.extrapolation_gap
                ));
            }
            emit(&report, out.as_ref(), "anchor.json")
        }
    }
}

/// Wall time lives in its own file so the other artifacts stay reproducible.
fn write_timing(out: &std::path::Path, start: Instant, log: &Log) -> Result<(), CliError> {
    let secs = start.elapsed().as_secs_f64();
    log.line(format!("wall time {secs:.3}s"));
    std::fs::write(out.join("timing.json"), format!("{{\n  \"wall_time_s\": {secs}\n}}\n"))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
