//! Configuration, scenario runs, batches, plots and verification.

pub mod batch;
pub mod config;
pub mod plot;
pub mod scenario;
pub mod verify;

pub use batch::{run_batch, BatchAggregate, BatchReport};
pub use config::{load_config, search_config, ConfigError, NoiseMode, ScenarioConfig};
pub use plot::emit_plots;
pub use scenario::{run_scenario, simulate, RunSummary, ScenarioOutcome, TrajectoryRow};
pub use verify::{verify, VerifyReport};
