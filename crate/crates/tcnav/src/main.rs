use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tcnav::scenario::FilterChoice;
use tcnav::sweep::{run_sweep, SweepSpec};
use tcnav::{run_scenario, Error, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "tcnav", version, about = "Tightly coupled GNSS/INS navigation with protection levels and IMU fault detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        matches!(s, Switch::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Ekf,
    Ehf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and run the navigation pipeline on it.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        filter: Option<FilterArg>,
        /// IMU fault detection and fallback filter.
        #[arg(long, value_enum)]
        fd: Option<Switch>,
        /// Protection levels (error zonotope).
        #[arg(long, value_enum)]
        pl: Option<Switch>,
        /// Zonotope reduction order.
        #[arg(long)]
        q: Option<usize>,
        #[arg(long = "n-sigma-z")]
        n_sigma_z: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Truncate simulated noise at the scenario's bound.
        #[arg(long = "bounded-noise", value_enum)]
        bounded_noise: Option<Switch>,
        /// Writes run.csv and summary.json here; prints the summary otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a settings and reduction-order sweep.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the simulated sensor streams only.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> tcnav::Result<()> {
    match cli.command {
        Command::Run { scenario, filter, fd, pl, q, n_sigma_z, seed, bounded_noise, out } => {
            let scenario = Scenario::load(&scenario)?;
            let options = RunOptions {
                filter: filter.map(|f| match f {
                    FilterArg::Ekf => FilterChoice::Ekf,
                    FilterArg::Ehf => FilterChoice::Ehf,
                }),
                fd: fd.map(Into::into),
                pl: pl.map(Into::into),
                q,
                n_sigma_z,
                seed,
                bounded: bounded_noise.map(Into::into),
            };
            let report = run_scenario(&scenario, &options)?;
            match out {
                Some(dir) => {
                    report.write(&dir)?;
                    eprintln!("wrote {}", dir.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&report.summary)?),
            }
            Ok(())
        }
        Command::Sweep { spec, out } => {
            let spec = SweepSpec::load(&spec)?;
            run_sweep(&spec, &out)
        }
        Command::Simulate { scenario, out } => {
            let scenario = Scenario::load(&scenario)?;
            let data = tcnav::sim::simulate(&scenario)?;
            tcnav::sim::write_streams(&data, &out)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
