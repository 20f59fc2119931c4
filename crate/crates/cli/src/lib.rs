//! Experiment runner for the FeFET weight-cell models: config loading,
//! deterministic execution and CSV output.

pub mod config;
pub mod experiments;
pub mod output;

use fexbar_core::circuit::SolverError;
use fexbar_core::XbarError;
use fexbar_nn::{HwError, SelectError, TrainError};
use thiserror::Error;

pub use config::{load, validate_config, Config, ConfigErrors, ExperimentKind};
pub use experiments::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

macro_rules! solver_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Solver(e.to_string())
            }
        }
    )*};
}

solver_error!(SolverError, XbarError, TrainError, HwError, SelectError);
