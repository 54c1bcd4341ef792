//! Configuration, persistence and table campaigns for compacton experiments.

pub mod campaign;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use campaign::{cmd_table, run_campaign, sweep_points, CampaignResult, PointResult, RowFit, SweepPoint, TableId, THREADS_ENV};
pub use commands::{cmd_analyze, cmd_dispersion, cmd_simulate, load_trajectory, write_trajectory, SimulationSummary};
pub use config::{parse_config, CampaignSettings, ExperimentConfig, ParseError, REQUIRED_KEYS};
pub use error::CliError;
pub use output::Cell;
