//! Closed-loop experiments: single runs, bandwidth sweeps, Monte Carlo
//! campaigns, statistics and file export.

pub mod config;
pub mod export;
pub mod montecarlo;
pub mod run;
pub mod stats;
pub mod sweep;

pub use config::{ExperimentConfig, ReferenceConfig};
pub use export::{export_run, read_timeseries_csv, write_timeseries_csv, RunReport};
pub use montecarlo::{monte_carlo, monte_carlo_member, MonteCarloResult, McRun};
pub use run::{run_closed_loop, run_with, summarize, Row, RunOptions, RunResult, RunSummary};
pub use stats::{Summary, Window, WindowBounds};
pub use sweep::{sweep_gamma, SweepAxis, SweepPoint, SweepResult};
