use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::encode::{CoEncoding, PenaltyWeights};

/// Weight regime: `sampler` for software simulated annealing, `digital` for
/// the stiffer regime tuned for digital-annealer style backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendProfile {
    #[default]
    Sampler,
    Digital,
}

impl BackendProfile {
    pub fn name(self) -> &'static str {
        match self {
            BackendProfile::Sampler => "sampler",
            BackendProfile::Digital => "digital",
        }
    }
}

impl FromStr for BackendProfile {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sampler" => Ok(BackendProfile::Sampler),
            "digital" => Ok(BackendProfile::Digital),
            other => Err(HarnessError::Config(format!(
                "unknown backend profile {other:?} (expected sampler or digital)"
            ))),
        }
    }
}

/// Default multipliers. Balanced: `(cost, consistency, exposure)`;
/// unbalanced: `(cost, consistency lin, consistency quad, exposure lin,
/// exposure quad)`. Group weights are not part of the defaults.
pub fn weight_defaults(encoding: CoEncoding, profile: BackendProfile) -> PenaltyWeights {
    let lambdas = match (encoding, profile) {
        (CoEncoding::Balanced, BackendProfile::Sampler) => vec![1e3, 1.0, 1.0],
        (CoEncoding::Balanced, BackendProfile::Digital) => vec![1e5, 1.0, 300.0],
        (CoEncoding::Unbalanced, BackendProfile::Sampler) => vec![1.5e4, 1.0, 1.0, 1.0, 50.0],
        (CoEncoding::Unbalanced, BackendProfile::Digital) => vec![2e4, 1.0, 1.0, 1.0, 50.0],
    };
    PenaltyWeights::new(lambdas).expect("defaults are valid")
}

/// Pads `weights` with unit group weights when the instance has groups and
/// the caller gave none.
pub fn with_group_weights(
    encoding: CoEncoding,
    weights: &PenaltyWeights,
    has_groups: bool,
) -> PenaltyWeights {
    let needed = match (encoding, has_groups) {
        (_, false) => return weights.clone(),
        (CoEncoding::Balanced, true) => 4,
        (CoEncoding::Unbalanced, true) => 7,
    };
    let mut l = weights.lambdas().to_vec();
    l.resize(needed.max(l.len()), 1.0);
    PenaltyWeights::new(l).expect("padding keeps weights valid")
}
