//! Synthetic instances, experiment orchestration and report files.

mod experiment;
mod generator;
mod kp;
mod weights;

pub use experiment::{
    read_allocation_csv, run_experiment, select_sample, write_allocation_csv, write_exposure_csv,
    EncodingSelection, ExperimentConfig, ReportBundle, RunRecord, WeightOverrides,
};
pub use kp::{kp_demo_models, run_kp_demo, write_kp_summary, KpRow};
pub use generator::{check_targets, generate_instance, GeneratorSpec, TierCount, TARGET_TOLERANCE};
pub use weights::{weight_defaults, with_group_weights, BackendProfile};

use thiserror::Error;

use crate::anneal::AnnealError;
use crate::encode::EncodeError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("LP baseline is {0}")]
    InfeasibleLp(String),
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::InfeasibleLp(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<EncodeError> for HarnessError {
    fn from(e: EncodeError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<AnnealError> for HarnessError {
    fn from(e: AnnealError) -> Self {
        match e {
            AnnealError::Export(m) => HarnessError::Io(m),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
