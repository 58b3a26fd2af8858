//! Monte Carlo experiment orchestration: configuration, seeding, sweeps and
//! CSV emission.

pub mod config;
mod run;
pub mod seed;

pub use config::{ChannelSource, ExperimentConfig, NoiseSection, Refinement, Scheme, Sweep};
pub use run::{
    run_cdf_sweep, run_simulate, run_tilt_sweep, run_tradeoff, CdfRow, CdfSweepOutput, ResultRow, RunOptions,
    SimulationOutput, SummaryRow, TiltOutput, TiltRow, TradeoffOutput, TradeoffRow,
};
