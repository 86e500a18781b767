//! Command-line front end for `dfrc-core`: TOML scene configuration,
//! end-to-end runs with artifact export, the validation report and the
//! AMPC/JRDAP benchmark.

pub mod bench;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod validation;

pub use bench::{run_benchmark, BenchmarkReport};
pub use config::SceneConfig;
pub use error::{CliError, Result};
pub use pipeline::{process, run_pipeline, Design, ProcessOutput, RunOptions, Setup};
pub use validation::{run_validation, ValidationReport};
