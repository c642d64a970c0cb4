use serde::{Deserialize, Serialize};

use super::EncodeError;

/// Penalty multipliers `lambda_0..lambda_k`. `lambda_0` always weights the
/// cost term; the meaning of the rest depends on the encoding:
///
/// | index | balanced    | unbalanced            |
/// |-------|-------------|-----------------------|
/// | 1     | consistency | consistency, linear   |
/// | 2     | exposure    | consistency, quadratic|
/// | 3     | groups      | exposure, linear      |
/// | 4     |             | exposure, quadratic   |
/// | 5     |             | groups, linear        |
/// | 6     |             | groups, quadratic     |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PenaltyWeights {
    lambdas: Vec<f64>,
}

impl PenaltyWeights {
    pub fn new(lambdas: Vec<f64>) -> Result<Self, EncodeError> {
        if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(EncodeError::Domain(format!(
                "penalty weights must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self { lambdas })
    }

    pub fn balanced(cost: f64, consistency: f64, exposure: f64, group: f64) -> Self {
        Self::new(vec![cost, consistency, exposure, group]).expect("valid weights")
    }

    #[allow(clippy::too_many_arguments)]
    pub fn unbalanced(
        cost: f64,
        consistency_linear: f64,
        consistency_quadratic: f64,
        exposure_linear: f64,
        exposure_quadratic: f64,
        group_linear: f64,
        group_quadratic: f64,
    ) -> Self {
        Self::new(vec![
            cost,
            consistency_linear,
            consistency_quadratic,
            exposure_linear,
            exposure_quadratic,
            group_linear,
            group_quadratic,
        ])
        .expect("valid weights")
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn get(&self, k: usize) -> Result<f64, EncodeError> {
        self.lambdas.get(k).copied().ok_or_else(|| {
            EncodeError::Domain(format!(
                "missing lambda_{k} ({} weights given)",
                self.lambdas.len()
            ))
        })
    }

    pub fn cost(&self) -> f64 {
        self.lambdas.first().copied().unwrap_or(0.0)
    }
}

impl TryFrom<Vec<f64>> for PenaltyWeights {
    type Error = EncodeError;

    fn try_from(lambdas: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(lambdas)
    }
}

impl From<PenaltyWeights> for Vec<f64> {
    fn from(w: PenaltyWeights) -> Self {
        w.lambdas
    }
}
