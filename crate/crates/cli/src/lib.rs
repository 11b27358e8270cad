//! Scenario-file front end for the splitter simulator.

pub mod config;
pub mod run;

pub use config::{
    parse_config, parse_config_with_overrides, ConfigError, Scenario, ScenarioConfig,
};
pub use run::{run_scenario, RunOutcome};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "OAM_BENCH_OUT";
