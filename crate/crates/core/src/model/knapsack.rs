use serde::{Deserialize, Serialize};

use super::ModelError;

/// 0/1 knapsack: maximise total value subject to a weight capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    weights: Vec<u64>,
    values: Vec<u64>,
    capacity: u64,
}

impl KnapsackInstance {
    pub fn new(weights: Vec<u64>, values: Vec<u64>, capacity: u64) -> Result<Self, ModelError> {
        if weights.len() != values.len() {
            return Err(ModelError::InvalidInstance(format!(
                "{} weights but {} values",
                weights.len(),
                values.len()
            )));
        }
        if weights.is_empty() {
            return Err(ModelError::InvalidInstance(
                "knapsack needs at least one item".into(),
            ));
        }
        Ok(Self {
            weights,
            values,
            capacity,
        })
    }

    /// Ten-item benchmark with capacity 165. Its optimum is 309, reached by
    /// items 1, 2, 3, 4 and 6 at full capacity.
    pub fn ten_item_benchmark() -> Self {
        Self {
            weights: vec![23, 31, 29, 44, 53, 38, 63, 85, 89, 82],
            values: vec![92, 57, 49, 68, 60, 43, 67, 84, 87, 72],
            capacity: 165,
        }
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total (weight, value) of a selection given as item bits. Extra
    /// trailing bits (slack) are ignored.
    pub fn evaluate(&self, selection: &[u8]) -> (u64, u64) {
        self.weights
            .iter()
            .zip(&self.values)
            .zip(selection)
            .filter(|(_, &x)| x != 0)
            .fold((0, 0), |(w, v), ((wi, vi), _)| (w + wi, v + vi))
    }
}
