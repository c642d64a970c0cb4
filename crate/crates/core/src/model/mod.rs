//! Problem-domain types: the knapsack testbed, the collateral allocation
//! instance, allocations and their feasibility evaluation.

mod allocation;
mod collateral;
mod knapsack;

pub use allocation::{
    decode_solution, evaluate_allocation, AllocationMatrix, FeasibilityReport, GroupViolation,
    LimitViolation, CONSISTENCY_TOLERANCE, DEFAULT_EPSILON,
};
pub use collateral::{omega_matrix, Account, Asset, CollateralInstance, Duration, Groups};
pub use knapsack::KnapsackInstance;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("bitstring length {found} does not match layout ({expected} bits)")]
    Layout { expected: usize, found: usize },
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("malformed instance document: {0}")]
    Parse(String),
}
