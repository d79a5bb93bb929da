use std::path::PathBuf;
use std::process::ExitCode;

use aklab::certify::{Setting, DEFAULT_ARGMAX_REL_TOL};
use aklab_cli::commands::{self, Axis, CertifyInput};
use aklab_cli::scenario::Scenario;
use aklab_cli::{exit_code, CliError, CliResult};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "aklab", version, about = "Spatial AK growth on the circle: simulation and positivity certificates")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in scenario (table1, fig2-kbar10, fig2-kbar100, fig3-sigma0, nonneg-witness)
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Output root
    #[arg(long, global = true, env = "AKLAB_OUT", default_value = "out")]
    out: PathBuf,
    /// Grid points
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Time step
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Discount rate
    #[arg(long, global = true)]
    rho: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenpair and policy constants
    Eigen,
    /// Run one scenario
    Simulate,
    /// Run a scenario once per value of one parameter
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Build a certified non-invariance witness
    Counterexample {
        #[arg(long, default_value = "l2")]
        setting: Setting,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        big_c: f64,
    },
    /// Check a certificate; exits 1 when it fails
    Certify {
        /// Saved witness.json
        #[arg(long, conflicts_with = "field")]
        witness: Option<PathBuf>,
        /// theta,f CSV on a uniform grid
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value = "l2")]
        setting: Setting,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        big_c: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_ARGMAX_REL_TOL)]
        argmax_tol: f64,
    },
    /// Regenerate the data behind a figure
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
}

fn print<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serializing output: {e}")))?;
    println!("{text}");
    Ok(())
}

fn required(value: Option<f64>, flag: &str) -> CliResult<f64> {
    value.ok_or_else(|| CliError::Validation(format!("--{flag} is required here")))
}

fn run(cli: Cli) -> CliResult<()> {
    let c = &cli.common;
    let scenario = || -> CliResult<Scenario> {
        Ok(Scenario::select(c.config.as_deref(), c.scenario.as_deref())?.with_overrides(c.n, c.dt, c.rho))
    };
    match cli.command {
        Command::Eigen => {
            let s = scenario()?;
            print(&commands::eigen(&s, &c.out.join(&s.name).join("eigen"))?)
        }
        Command::Simulate => {
            let s = scenario()?;
            let outcome = commands::run_scenario(&s, &c.out.join(&s.name))?;
            print(&outcome.brief())
        }
        Command::Sweep { axis, values } => {
            let s = scenario()?;
            let dir = c.out.join(format!("{}-sweep-{}", s.name, axis.name()));
            print(&commands::sweep(&s, axis, &values, &dir)?)
        }
        Command::Counterexample {
            setting,
            delta,
            big_c,
        } => {
            let s = scenario()?;
            let dir = c.out.join(format!("counterexample-{setting}-{delta}-{big_c}"));
            print(&commands::counterexample(&s, setting, delta, big_c, &dir)?)
        }
        Command::Certify {
            witness,
            field,
            setting,
            delta,
            big_c,
            argmax_tol,
        } => {
            let input = match (witness, field) {
                (Some(path), _) => CertifyInput::Witness(path),
                (None, Some(path)) => CertifyInput::Field {
                    path,
                    setting,
                    delta: required(delta, "delta")?,
                    big_c: required(big_c, "big-c")?,
                },
                (None, None) => CertifyInput::Build {
                    setting,
                    delta: required(delta, "delta")?,
                    big_c: required(big_c, "big-c")?,
                },
            };
            let report = commands::certify(&scenario()?, &input, argmax_tol)?;
            print(&report)?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::CertificateFailed)
            }
        }
        Command::Reproduce { figure } => match figure {
            Figure::Fig2 => print(&commands::reproduce_fig2(c.n, c.dt, c.rho, &c.out.join("fig2"))?),
            Figure::Fig3 => print(&commands::reproduce_fig3(c.n, c.dt, c.rho, &c.out.join("fig3"))?),
        },
    }
}

fn main() -> ExitCode {
    exit_code(run(Cli::parse()))
}
