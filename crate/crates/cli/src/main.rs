use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otfs_prach::experiment::{
    run_cdf_sweep, run_simulate, run_tilt_sweep, run_tradeoff, ExperimentConfig, RunOptions, SummaryRow,
};
use otfs_prach::Error;

/// OTFS and OFDM PRACH ranging experiments for UAV-borne receivers.
#[derive(Parser)]
#[command(name = "otfs-prach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured scheme along the trajectory.
    Simulate(RunArgs),
    /// Error CDFs across a list of subcarrier spacings.
    CdfSweep(RunArgs),
    /// RMSE and propulsion power across a list of speeds.
    SpeedTradeoff(RunArgs),
    /// RMSE and LoS extent across a list of antenna tilts.
    TiltSweep(RunArgs),
    /// Parse and validate a configuration, then print its canonical form.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, RunOptions), Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.threads == Some(0) {
            return Err(Error::Config {
                path: "--threads".into(),
                message: "must be at least 1".into(),
            });
        }
        Ok((cfg, RunOptions { threads: self.threads }))
    }
}

fn print_summary(rows: &[SummaryRow]) {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
    println!("scheme  delta_f_hz  speed_mps  tilt_deg  detected      rmse_m  mean_abs_m");
    for r in rows {
        println!(
            "{:<6}  {:>10}  {:>9.2}  {:>8.2}  {:>8}  {:>10}  {:>10}",
            otfs_prach::prach_modem::Modulation::from(r.scheme).as_str(),
            r.delta_f_hz,
            r.speed_mps,
            r.tilt_deg,
            format!("{}/{}", r.detected, r.samples),
            fmt(r.rmse_m),
            fmt(r.mean_abs_error_m),
        );
    }
}

fn wrote(out: &Path) {
    eprintln!("results written to {}", out.display());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => {
            let (cfg, opts) = args.load()?;
            let out = run_simulate(&cfg, &opts)?;
            out.write(&args.out)?;
            print_summary(&out.summary);
            wrote(&args.out);
        }
        Command::CdfSweep(args) => {
            let (cfg, opts) = args.load()?;
            let out = run_cdf_sweep(&cfg, &opts)?;
            out.write(&args.out)?;
            print_summary(&out.simulation.summary);
            wrote(&args.out);
        }
        Command::SpeedTradeoff(args) => {
            let (cfg, opts) = args.load()?;
            let out = run_tradeoff(&cfg, &opts)?;
            out.write(&args.out)?;
            print_summary(&out.simulation.summary);
            wrote(&args.out);
        }
        Command::TiltSweep(args) => {
            let (cfg, opts) = args.load()?;
            let out = run_tilt_sweep(&cfg, &opts)?;
            out.write(&args.out)?;
            print_summary(&out.simulation.summary);
            wrote(&args.out);
        }
        Command::ValidateConfig { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            print!("{}", cfg.to_toml_string()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
