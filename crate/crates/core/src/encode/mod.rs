//! Binary encodings: variable layouts, QUBO and Ising models, and the
//! knapsack and collateral encoders.

mod binarize;
mod collateral;
mod ising;
mod knapsack;
mod layout;
mod normalize;
mod qubo;
mod weights;

pub use binarize::{bit_weights, resolution, slack_bit_count, truncated_bits};
pub use collateral::{
    co_qubo, co_qubo_balanced, co_qubo_balanced_with, co_qubo_unbalanced,
    co_qubo_unbalanced_with, CoEncoding, CoEncodingOptions,
};
pub use ising::{ising_to_qubo, qubo_to_ising, spins_of, IsingModel};
pub use knapsack::{kp_qubo_log, kp_qubo_onehot, kp_qubo_unbalanced, KP_UNBALANCED_DEFAULTS};
pub use layout::{ConstraintId, DecisionBlock, DecisionKey, SlackBlock, VariableLayout};
pub use normalize::{normalization_factor, normalize_terms};
pub use qubo::{EncodedTerm, Poly, QuboDocument, QuboModel};
pub use weights::PenaltyWeights;

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("malformed model document: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
