//! File formats, configuration and commands around `zeroshot-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod records;
pub mod summary;

pub use commands::{
    cmd_adaptive, cmd_classify, cmd_eval, cmd_normalize, cmd_render, cmd_validate, AdaptiveOutcome,
    EvalOutcome, DEFAULT_TOP_K, ENSEMBLE_ID,
};
pub use config::{load_bundle, Bundle, ExperimentConfig, MetricChoice, SetupRef};
pub use error::{exit, CliError};
