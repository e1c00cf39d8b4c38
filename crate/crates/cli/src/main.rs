use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod verify;

use commands::{FlowRange, WignerArgs};
use config::{Format, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "phasespace", version, about = "Phase-space geometry of quantum indeterminacy")]
struct Cli {
    /// Reduced Planck constant.
    #[arg(long, global = true, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Monte Carlo sample budget.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: usize,
    /// Output format; `flow` and `wigner-grid` default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Double flow times, matching the `exp(2tJM)` parametrization.
    #[arg(long, global = true)]
    paper_time_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pre-Iwasawa factorization S = V_P M_L R of a symplectic matrix.
    Decompose { input: PathBuf },
    /// Mahler volume of a convex body and the classical bounds.
    Mahler { input: PathBuf },
    /// Capacities of a covariance ellipsoid, a quasi state or a body pair.
    Capacity {
        input: PathBuf,
        /// Also write the minimal closed orbit as CSV.
        #[arg(long)]
        orbit_csv: Option<PathBuf>,
    },
    /// Quantum condition, Robertson-Schroedinger margins and purity of a covariance matrix.
    QuantumCheck { input: PathBuf },
    /// Converts a Gaussian state to its quantum blob or back.
    Blob { input: PathBuf },
    /// Blob defect, energy drift and phase error along the Fermi flow.
    Flow {
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Wigner function of a one-dimensional Gaussian state on a grid.
    WignerGrid {
        input: PathBuf,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        oversample: usize,
        #[arg(long)]
        p_max: Option<f64>,
        /// Binary WIGGRID1 dump instead of text.
        #[arg(long)]
        binary: bool,
    },
    /// Runs invariant suites (all, symplin, convbody, quasistate, gaussian, wigner, fermi).
    Verify {
        #[arg(default_value = "all")]
        suites: Vec<String>,
    },
}

fn config(cli: &Cli, default_format: Format) -> Result<RunConfig, CliError> {
    if !(cli.hbar > 0.0 && cli.hbar.is_finite()) {
        return Err(CliError::Parse(format!("--hbar must be positive, got {}", cli.hbar)));
    }
    if !(cli.tol > 0.0) {
        return Err(CliError::Parse(format!("--tol must be positive, got {}", cli.tol)));
    }
    Ok(RunConfig {
        hbar: cli.hbar,
        seed: cli.seed,
        tol: cli.tol,
        samples: cli.samples,
        format: cli.format.unwrap_or(default_format),
        output: cli.output.clone(),
        paper_time_scale: cli.paper_time_scale,
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let default_format = match cli.command {
        Command::Flow { .. } | Command::WignerGrid { .. } => Format::Csv,
        _ => Format::Json,
    };
    let cfg = config(cli, default_format)?;
    match &cli.command {
        Command::Decompose { input } => commands::decompose(&cfg, input),
        Command::Mahler { input } => commands::mahler(&cfg, input),
        Command::Capacity { input, orbit_csv } => commands::capacity(&cfg, input, orbit_csv.as_deref()),
        Command::QuantumCheck { input } => commands::quantum_check(&cfg, input),
        Command::Blob { input } => commands::blob(&cfg, input),
        Command::Flow {
            input,
            t_start,
            t_end,
            steps,
        } => commands::flow(
            &cfg,
            input,
            &FlowRange {
                t_start: *t_start,
                t_end: *t_end,
                steps: *steps,
            },
        ),
        Command::WignerGrid {
            input,
            points,
            oversample,
            p_max,
            binary,
        } => commands::wigner(
            &cfg,
            input,
            &WignerArgs {
                points: *points,
                oversample: *oversample,
                p_max: *p_max,
                binary: *binary,
            },
        ),
        Command::Verify { suites } => {
            let report = verify::run(suites, cfg.seed, cfg.hbar).map_err(CliError::Parse)?;
            for s in &report.suites {
                eprintln!("{}: {}", s.suite, if s.passed { "PASS" } else { "FAIL" });
                for c in s.checks.iter().filter(|c| !c.pass) {
                    eprintln!("  {} = {:e} (tol {:e})", c.name, c.value, c.tol);
                }
            }
            output::emit_report(&cfg, &report)?;
            if report.all_passed {
                Ok(())
            } else {
                Err(CliError::Invariant("one or more suites failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
