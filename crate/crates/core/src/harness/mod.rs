//! Experiment runner behind the command-line interface: seeded runs in
//! three modes, per-step CSV records, SVG plots and run comparison.

mod compare;
mod config;
mod plot;
mod record;
mod run;

pub use compare::{compare_dirs, ComparisonReport, ComparisonRow};
pub use config::AgentConfig;
pub use plot::{emit_plots, read_records, CsvTable};
pub use record::{csv_header, write_csv, RunRecord, CSV_SCHEMA_VERSION};
pub use run::{run, RunConfig, RunMode, RunResult, RunSummary, FINAL_WINDOW};

use std::path::PathBuf;

use crate::discriminator::StepError;
use crate::grid::GridError;
use crate::policies::PolicyError;
use crate::reward::RewardError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("step {step}: {message}")]
    Step { step: u64, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// 1 for configuration problems, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn at_step(step: u64, err: StepError) -> Self {
        HarnessError::Step { step, message: err.to_string() }
    }
}

impl From<GridError> for HarnessError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::Config(m) => HarnessError::Config(m),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

impl From<PolicyError> for HarnessError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Config(m) => HarnessError::Config(m),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

impl From<RewardError> for HarnessError {
    fn from(e: RewardError) -> Self {
        HarnessError::Config(e.to_string())
    }
}
