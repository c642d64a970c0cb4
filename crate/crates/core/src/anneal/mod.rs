//! Simulated-annealing sampler over QUBO models, plus exact oracles
//! (knapsack dynamic programming and exhaustive enumeration).

mod exact;
mod sampler;
mod schedule;

pub use exact::{enumerate_exact, kp_dp, kp_exact_dp, lowest_levels, ExactResult, DEFAULT_MAX_BITS};
pub use sampler::{anneal, anneal_traced, Sample, SampleMetadata, SampleSet};
pub use schedule::{ResolvedSchedule, Schedule, ScheduleKind};

use thiserror::Error;

use crate::encode::{EncodeError, QuboModel};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum AnnealError {
    #[error("model has no variables")]
    EmptyModel,
    #[error("model has {n} variables, enumeration limit is {max}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("export failed: {0}")]
    Export(String),
}

impl From<csv::Error> for AnnealError {
    fn from(e: csv::Error) -> Self {
        AnnealError::Export(e.to_string())
    }
}

impl From<std::io::Error> for AnnealError {
    fn from(e: std::io::Error) -> Self {
        AnnealError::Export(e.to_string())
    }
}

/// `E(x with bit flip toggled) - E(x)`.
pub fn delta_energy<S: Scalar>(
    model: &QuboModel<S>,
    state: &[u8],
    flip: usize,
) -> Result<S, EncodeError> {
    model.delta_energy(state, flip)
}
