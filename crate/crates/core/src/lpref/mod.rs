//! Continuous LP relaxation of the collateral problem, solved with a dense
//! bounded-variable simplex. Provides the lower bound and the fractional
//! reference allocation.

mod problem;
mod simplex;

pub use problem::{
    Certificate, LpProblem, LpRow, LpSolution, RowKind, Sense, CERTIFICATE_TOL,
    DEFAULT_MAX_ITERATIONS,
};
pub use simplex::{solve as solve_standard, LpStatus, SimplexResult, StandardForm};

use thiserror::Error;

use crate::model::{CollateralInstance, FeasibilityReport, ModelError};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("LP status is {0}, not optimal")]
    NotOptimal(&'static str),
}

pub fn solve_lp(instance: &CollateralInstance) -> Result<LpSolution, LpError> {
    solve_lp_with::<f64>(instance, DEFAULT_MAX_ITERATIONS)
}

pub fn solve_lp_with<S: Scalar>(
    instance: &CollateralInstance,
    max_iterations: usize,
) -> Result<LpSolution, LpError> {
    Ok(LpProblem::from_instance(instance)?.solve::<S>(max_iterations))
}

/// Objective of an evaluated allocation minus the LP optimum.
pub fn lp_gap(lp: &LpSolution, report: &FeasibilityReport) -> Result<f64, LpError> {
    if lp.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal(lp.status.name()));
    }
    Ok(report.objective - lp.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_allocation, Account, Asset, Duration};

    fn instance(exposures: &[f64]) -> CollateralInstance {
        CollateralInstance::new(
            vec![
                Asset {
                    quantity: 100.0,
                    unit_value: 1.0,
                    tier: 0.2,
                },
                Asset {
                    quantity: 50.0,
                    unit_value: 2.0,
                    tier: 0.8,
                },
            ],
            exposures
                .iter()
                .map(|&c| Account {
                    exposure: c,
                    duration: Duration::Short,
                })
                .collect(),
            vec![vec![1.0; exposures.len()], vec![0.9; exposures.len()]],
        )
        .unwrap()
    }

    #[test]
    fn infeasible_when_inventory_too_small() {
        let sol = solve_lp(&instance(&[150.0, 100.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(matches!(
            lp_gap(&sol, &evaluate_allocation(&sol.allocation, &instance(&[150.0, 100.0]), 0.05).unwrap()),
            Err(LpError::NotOptimal("infeasible"))
        ));
    }

    #[test]
    fn zero_exposure_posts_nothing() {
        let inst = instance(&[0.0, 0.0]);
        let sol = solve_lp(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
        assert!(sol.allocation.rows().iter().flatten().all(|&q| q == 0.0));
    }

    #[test]
    fn prefers_cheap_asset() {
        // short-term accounts: tier 0.8 costs 0.2 per share, tier 0.2 costs 0.8
        let inst = instance(&[45.0, 45.0]);
        let sol = solve_lp(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.certificate.holds(CERTIFICATE_TOL));
        assert!((sol.allocation.row_sum(1) - 1.0).abs() < 1e-9);
        let report = evaluate_allocation(&sol.allocation, &inst, 0.0).unwrap();
        assert!(report.feasible_within);
        assert!(lp_gap(&sol, &report).unwrap().abs() < 1e-12);
    }
}
