use serde::{Deserialize, Serialize};

use super::collateral::omega_matrix;
use super::{CollateralInstance, ModelError};
use crate::encode::{DecisionKey, VariableLayout};

/// Default relative exposure shortfall tolerated by `feasible_within`.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Absolute tolerance on `sum_j Q_ij <= 1`.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Fraction of each asset posted to each account, `entries[i][j]` in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AllocationMatrix {
    rows: Vec<Vec<f64>>,
}

impl AllocationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(ModelError::InvalidAllocation("ragged rows".into()));
        }
        if let Some(q) = rows.iter().flatten().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(ModelError::InvalidAllocation(format!(
                "entry {q} outside [0, 1]"
            )));
        }
        Ok(Self { rows })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            rows: vec![vec![0.0; m]; n],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows.first().map_or(0, |r| r.len()))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitViolation {
    pub asset: usize,
    pub account: usize,
    /// Posted quantity above the limit, in asset units.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupViolation {
    pub group: usize,
    pub account: usize,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `sum_ij Omega_ij Q_ij`.
    pub objective: f64,
    /// `max(0, sum_j Q_ij - 1)` per asset.
    pub consistency_residuals: Vec<f64>,
    /// Posted collateral value over required exposure, per account (1 when
    /// the exposure is zero).
    pub exposure_coverage: Vec<f64>,
    /// Posted collateral value in USD, per account.
    pub posted_value: Vec<f64>,
    pub limit_violations: Vec<LimitViolation>,
    pub group_violations: Vec<GroupViolation>,
    pub epsilon: f64,
    pub feasible_within: bool,
}

impl FeasibilityReport {
    pub fn consistent(&self) -> bool {
        self.consistency_residuals
            .iter()
            .all(|&r| r <= CONSISTENCY_TOLERANCE)
    }

    /// Largest exposure shortfall in percent (0 when every account is covered).
    pub fn max_exposure_shortfall_pct(&self) -> f64 {
        self.exposure_coverage
            .iter()
            .map(|&c| (1.0 - c).max(0.0) * 100.0)
            .fold(0.0, f64::max)
    }
}

fn excess_beyond(value: f64, bound: f64) -> Option<f64> {
    let excess = value - bound;
    (excess > 1e-9 * bound.max(1.0)).then_some(excess)
}

/// Objective and constraint residuals of an allocation.
pub fn evaluate_allocation(
    q: &AllocationMatrix,
    instance: &CollateralInstance,
    epsilon: f64,
) -> Result<FeasibilityReport, ModelError> {
    let (n, m) = (instance.n_assets(), instance.n_accounts());
    if q.shape() != (n, m) {
        return Err(ModelError::Shape {
            expected: (n, m),
            found: q.shape(),
        });
    }
    let omega = omega_matrix(instance);
    let objective = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| omega[i][j] * q.get(i, j))
        .sum();

    let consistency_residuals = (0..n).map(|i| (q.row_sum(i) - 1.0).max(0.0)).collect();

    let posted_value: Vec<f64> = (0..m)
        .map(|j| {
            (0..n)
                .map(|i| q.get(i, j) * instance.collateral_value(i, j))
                .sum()
        })
        .collect();
    let exposure_coverage: Vec<f64> = posted_value
        .iter()
        .zip(&instance.accounts)
        .map(|(&posted, acc)| {
            if acc.exposure == 0.0 {
                1.0
            } else {
                posted / acc.exposure
            }
        })
        .collect();

    let mut limit_violations = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if let Some(limit) = instance.limit(i, j) {
                let posted = q.get(i, j) * instance.assets[i].quantity;
                if let Some(excess) = excess_beyond(posted, limit) {
                    limit_violations.push(LimitViolation {
                        asset: i,
                        account: j,
                        excess,
                    });
                }
            }
        }
    }

    let mut group_violations = Vec::new();
    if let Some(groups) = &instance.groups {
        for (g, caps) in groups.caps.iter().enumerate() {
            for (j, &cap) in caps.iter().enumerate() {
                let posted: f64 = (0..n)
                    .filter(|&i| groups.membership[i][g] == 1)
                    .map(|i| q.get(i, j) * instance.assets[i].quantity)
                    .sum();
                if let Some(excess) = excess_beyond(posted, cap) {
                    group_violations.push(GroupViolation {
                        group: g,
                        account: j,
                        excess,
                    });
                }
            }
        }
    }

    let mut report = FeasibilityReport {
        objective,
        consistency_residuals,
        exposure_coverage,
        posted_value,
        limit_violations,
        group_violations,
        epsilon,
        feasible_within: false,
    };
    report.feasible_within = report.consistent()
        && report.limit_violations.is_empty()
        && report.group_violations.is_empty()
        && report.exposure_coverage.iter().all(|&c| c >= 1.0 - epsilon);
    Ok(report)
}

/// Reads the allocation encoded by the decision bits of `bits`. Accepts either
/// a full QUBO state (slack bits are ignored) or just the decision prefix.
pub fn decode_solution(
    bits: &[u8],
    layout: &VariableLayout,
    instance: &CollateralInstance,
) -> Result<AllocationMatrix, ModelError> {
    let decision = layout.decision_bit_count();
    if bits.len() != layout.total && bits.len() != decision {
        return Err(ModelError::Layout {
            expected: decision,
            found: bits.len(),
        });
    }
    let mut q = AllocationMatrix::zeros(instance.n_assets(), instance.n_accounts());
    for block in &layout.decision {
        match block.key {
            DecisionKey::Pair { asset, account }
                if asset < instance.n_assets() && account < instance.n_accounts() =>
            {
                q.rows[asset][account] = block.value(bits);
            }
            key => {
                return Err(ModelError::InvalidAllocation(format!(
                    "layout block {key:?} does not address this instance"
                )))
            }
        }
    }
    Ok(q)
}
