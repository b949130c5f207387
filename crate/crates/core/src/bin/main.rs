use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ch_apparatus::check::{run_check, CheckOptions, Fault};
use ch_apparatus::config::{parse_config, ExperimentConfig, Format};
use ch_apparatus::monte_carlo::DEFAULT_TRIALS;
use ch_apparatus::report::{cmd_demo, cmd_exact, cmd_simulate, cmd_sweep, Range, RunReport};
use ch_apparatus::{Error, Result};

/// Mechanical apparatus that imitates a Clauser-Horne violation.
#[derive(Parser)]
#[command(name = "ch-apparatus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Staggered-layout demo: exact tables, Monte Carlo, naive and corrected analysis.
    Demo {
        #[arg(long, default_value_t = PI / 3.0)]
        gamma: f64,
        #[arg(long, default_value_t = PI / 6.0)]
        theta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per sequence.
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact analysis of a configuration, no sampling.
    Exact {
        #[arg(long, conflicts_with_all = ["gamma", "theta"])]
        config: Option<PathBuf>,
        #[arg(long, requires = "theta")]
        gamma: Option<f64>,
        #[arg(long, requires = "gamma")]
        theta: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo campaign described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the campaign seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides every sequence's trial count.
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// CSV grid of naive and corrected CH values over (gamma, theta).
    Sweep {
        /// `lo:hi` or a single value.
        #[arg(long)]
        gamma: Range,
        #[arg(long)]
        theta: Range,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Internal cross-validation suite.
    Check {
        #[arg(long, hide = true)]
        inject_fault: bool,
        #[arg(long, hide = true)]
        trials: Option<u64>,
    },
}

fn emit(report: &RunReport, output: &OutputArgs, cfg_output: Option<&ch_apparatus::config::OutputSpec>) -> Result<()> {
    let format = output.format.or(cfg_output.map(|o| o.format)).unwrap_or_default();
    let text = report.render(format);
    let path = output.out.as_deref().or(cfg_output.and_then(|o| o.path.as_deref()));
    write_text(path, &text)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Demo { gamma, theta, seed, trials, output } => {
            let report = cmd_demo(gamma, theta, seed, trials)?;
            emit(&report, &output, None)?;
        }
        Command::Exact { config, gamma, theta, output } => {
            let cfg = match (config, gamma, theta) {
                (Some(path), _, _) => parse_config(&path)?,
                (None, Some(g), Some(t)) => ExperimentConfig::staggered(g, t)?,
                _ => ExperimentConfig::staggered(PI / 3.0, PI / 6.0)?,
            };
            emit(&cmd_exact(&cfg)?, &output, Some(&cfg.output))?;
        }
        Command::Simulate { config, seed, trials, output } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = seed {
                cfg.campaign.seed = s;
            }
            if let Some(n) = trials {
                cfg.campaign.trials.values_mut().for_each(|v| *v = n);
            }
            emit(&cmd_simulate(&cfg)?, &output, Some(&cfg.output))?;
        }
        Command::Sweep { gamma, theta, steps, out } => {
            let r = cmd_sweep(gamma, theta, steps, &out)?;
            eprintln!("wrote {} rows to {} ({} skipped)", r.rows.len(), out.display(), r.skipped);
        }
        Command::Check { inject_fault, trials } => {
            let start = Instant::now();
            let opts = CheckOptions { fault: inject_fault.then_some(Fault::PerturbClosedForm), trials };
            let results = run_check(opts);
            let mut out = std::io::stdout().lock();
            for r in &results {
                writeln!(out, "{r}")?;
            }
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if failed.is_empty() {
                writeln!(out, "all {} checks passed", results.len())?;
            } else {
                writeln!(out, "failed checks: {}", failed.join(", "))?;
            }
            eprintln!("check finished in {:.1} s", start.elapsed().as_secs_f64());
            if !failed.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
