use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use microgrid_core::runner::{
    reference_markdown, render_scenario, resolve_scenario, write_outputs, OutputOptions, CANONICAL,
};
use microgrid_core::{run_scenario, Error, Scenario};

#[derive(Parser)]
#[command(version, about = "Parallel droop-controlled inverter simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a scenario file
    Run {
        /// Built-in name (see `list-scenarios`) or path to a scenario file
        #[arg(long)]
        scenario: String,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Override the communication channel seed
        #[arg(long)]
        seed: Option<u64>,
        /// Write timeseries.csv, metrics.csv and messages.csv
        #[arg(long)]
        csv: bool,
        /// Write SVG plots
        #[arg(long)]
        plots: bool,
        /// Keep one time-series row every K control ticks
        #[arg(long)]
        decimate: Option<usize>,
    },
    /// List the built-in scenarios
    ListScenarios,
    /// Parse and validate a scenario file
    Validate { path: PathBuf },
    /// Print the fully expanded form of a scenario
    Show { scenario: String },
    /// Print the scenario file reference (Markdown)
    Reference,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            csv,
            plots,
            decimate,
        } => {
            let mut s = resolve_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(k) = decimate {
                s.decimate = k;
            }
            s.validate()?;
            let artifacts = run_scenario(&s)?;
            let files = write_outputs(&artifacts, &out, OutputOptions { csv, plots })
                .with_context(|| format!("writing outputs to {}", out.display()))?;
            if let Some(m) = artifacts.final_metrics() {
                println!(
                    "{}: i_dc_cir={:.4} A  i_ac_err_rms={:.4} A  sharing_error={:.4}",
                    s.name, m.i_dc_cir, m.i_ac_err_rms, m.sharing_error
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::ListScenarios => {
            for name in CANONICAL {
                println!("{name:<10} {}", Scenario::describe(name));
            }
        }
        Command::Validate { path } => {
            let s = microgrid_core::runner::load_scenario(&path)?;
            println!(
                "{}: ok ({} s, {} events)",
                path.display(),
                s.duration,
                s.events.len()
            );
        }
        Command::Show { scenario } => print!("{}", render_scenario(&resolve_scenario(&scenario)?)),
        Command::Reference => print!("{}", reference_markdown()),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => 2,
        Some(e) if e.is_numerical() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
