//! `coop-handover`: coverage curves, spectral-efficiency tables, throughput
//! sweeps and self-checks for handover skipping with two-BS cooperation.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coop_handover::model::db_grid;
use coop_handover::{validate_scheme, SchemeSpec};

use crate::commands::{Mode, Status};
use crate::config::{velocity_grid, ConfigFile, Overrides, RunConfig};
use crate::error::CliError;
use crate::output::{emit, Format};

#[derive(Parser)]
#[command(name = "coop-handover", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// BS intensity in BS/km².
    #[arg(long)]
    lambda: Option<f64>,
    /// Path-loss exponent (> 2).
    #[arg(long)]
    eta: Option<f64>,
    /// Monte Carlo snapshots.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Best,
    Skip,
    SkipComp,
}

#[derive(Args)]
struct SchemeSelect {
    /// Restrict to one scheme; all variants are evaluated when omitted.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Cancel the nearest BS's interference.
    #[arg(long)]
    ic: bool,
    /// Phase-aligned joint transmission (simulation only).
    #[arg(long)]
    coherent: bool,
}

impl SchemeSelect {
    fn explicit(&self) -> Result<Option<SchemeSpec>, CliError> {
        let Some(arg) = self.scheme else {
            if self.ic || self.coherent {
                return Err(CliError::Config("--ic and --coherent require --scheme".into()));
            }
            return Ok(None);
        };
        let base = match arg {
            SchemeArg::Best => SchemeSpec::best(),
            SchemeArg::Skip => SchemeSpec::skip(false),
            SchemeArg::SkipComp => SchemeSpec::skip_coop(false),
        };
        let spec = SchemeSpec {
            ic: self.ic,
            coherent: self.coherent,
            ..base
        };
        Ok(Some(validate_scheme(spec)?))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Coverage probability against the SINR threshold.
    Coverage {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        select: SchemeSelect,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        tmin_db: f64,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        tmax_db: f64,
        #[arg(long, default_value_t = 1.0)]
        tstep_db: f64,
    },
    /// Spectral efficiency of every case, analytic and simulated.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
    /// Mobility-aware average throughput over a velocity grid.
    Throughput {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        select: SchemeSelect,
        #[arg(long)]
        vmin: Option<f64>,
        #[arg(long)]
        vmax: Option<f64>,
        #[arg(long)]
        vstep: Option<f64>,
        /// Handover delay in s; repeat or comma-separate for several.
        #[arg(long, value_delimiter = ',')]
        delay: Vec<f64>,
    },
    /// Run the self-check suite and report PASS/FAIL/SKIP per check.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Sample the ordered-distance densities for plotting.
    Distance {
        #[command(flatten)]
        common: Common,
        /// Grid points per axis.
        #[arg(long, default_value_t = 40)]
        points: usize,
    },
}

fn resolve(common: &Common, velocities: Option<Vec<f64>>, delays: Option<Vec<f64>>) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    RunConfig::resolve(
        file,
        Overrides {
            lambda: common.lambda,
            eta: common.eta,
            trials: common.trials,
            seed: common.seed,
            velocities,
            delays,
        },
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Coverage {
            common,
            select,
            mode,
            tmin_db,
            tmax_db,
            tstep_db,
        } => {
            let cfg = resolve(&common, None, None)?;
            let grid = db_grid(tmin_db, tmax_db, tstep_db)?;
            let schemes = match select.explicit()? {
                Some(s) => vec![s],
                None => {
                    let mut all = SchemeSpec::analytic_variants().to_vec();
                    if mode != Mode::Analytic {
                        all.push(SchemeSpec::skip_coop_coherent(false));
                        all.push(SchemeSpec::skip_coop_coherent(true));
                    }
                    all
                }
            };
            let table = commands::coverage_table(&cfg, &schemes, &grid, mode)?;
            emit(&table, &cfg, common.format, common.out.as_deref())
        }
        Command::Table1 { common } => {
            let cfg = resolve(&common, None, None)?;
            emit(&commands::table1(&cfg)?, &cfg, common.format, common.out.as_deref())
        }
        Command::Throughput {
            common,
            select,
            vmin,
            vmax,
            vstep,
            delay,
        } => {
            let velocities = if vmin.is_some() || vmax.is_some() || vstep.is_some() {
                Some(velocity_grid(
                    vmin.unwrap_or(0.0),
                    vmax.unwrap_or(200.0),
                    vstep.unwrap_or(10.0),
                )?)
            } else {
                None
            };
            let delays = (!delay.is_empty()).then_some(delay);
            let cfg = resolve(&common, velocities, delays)?;
            let schemes = match select.explicit()? {
                Some(s) => vec![s],
                None => SchemeSpec::analytic_variants().to_vec(),
            };
            emit(
                &commands::throughput_table(&cfg, &schemes)?,
                &cfg,
                common.format,
                common.out.as_deref(),
            )
        }
        Command::Validate { common } => {
            let cfg = resolve(&common, None, None)?;
            let checks = commands::validate(&cfg)?;
            for c in &checks {
                println!("{} {}: {}", c.status.label(), c.name, c.detail);
            }
            if common.out.is_some() {
                emit(
                    &commands::checks_table(&checks),
                    &cfg,
                    common.format,
                    common.out.as_deref(),
                )?;
            }
            let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed));
            }
            Ok(())
        }
        Command::Distance { common, points } => {
            let cfg = resolve(&common, None, None)?;
            emit(
                &commands::distance_table(&cfg, points)?,
                &cfg,
                common.format,
                common.out.as_deref(),
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
