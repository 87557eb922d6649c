use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dsph::cases::CaseId;
use dsph::config::{load_config, parse_config, RunConfig};
use dsph::output::{compare, execute, read_timeseries};

#[derive(Parser)]
#[command(name = "dsph", version, about = "SPH flow with turbulent scalar diffusion and ADM1 digestion kinetics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case and write time series and snapshots.
    Run {
        /// Case to run; overrides `case.id` from the config file.
        #[arg(long)]
        case: Option<String>,
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: `output.dir`, then $DSPH_OUT_DIR, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every effective configuration value.
    EchoConfig {
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the built-in cases.
    ListCases,
    /// Relative difference of total CH4 between two time-series files.
    Compare { baseline: PathBuf, run: PathBuf },
}

fn resolve(case: Option<String>, config: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => load_config(&path)?,
        None => parse_config("")?,
    };
    if let Some(name) = case {
        cfg.case.id = match CaseId::parse(&name) {
            Some(id) => id,
            None => bail!("unknown case `{name}`; see `dsph list-cases`"),
        };
        cfg.validate()?;
    }
    Ok(cfg)
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { case, config, out } => {
            let cfg = resolve(case, config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            let summary = execute(&cfg, &dir).with_context(|| format!("run failed (output in {})", dir.display()))?;
            println!(
                "{} steps to t = {} s in {:.1} s; wrote {} time series and {} snapshot files to {}",
                summary.steps,
                summary.t,
                summary.wall_seconds,
                summary.timeseries.len(),
                summary.snapshots.len(),
                dir.display()
            );
        }
        Command::EchoConfig { case, config } => print!("{}", resolve(case, config)?.echo()?),
        Command::ListCases => {
            for id in CaseId::ALL {
                println!("{:<8} {}", id.name(), id.describe());
            }
        }
        Command::Compare { baseline, run } => {
            let rows = compare(&read_timeseries(&baseline)?, &read_timeseries(&run)?)?;
            println!("time_s,rd_total_ch4");
            for r in rows {
                match r.rd_total_ch4 {
                    Some(rd) => println!("{},{}", r.time_s, rd),
                    None => println!("{},", r.time_s),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
