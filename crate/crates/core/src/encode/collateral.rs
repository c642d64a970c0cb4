//! QUBO encodings of the binarised collateral allocation problem.
//!
//! Every pair `(i, j)` gets a block of at most `B` bits decoding to
//! `q_ij = sum_b p_b x_ijb` on the grid `k / M`, `M = 2^B - 1`. Pairs with a
//! one-to-one quantity limit keep only the low bits that cannot exceed it.

use serde::{Deserialize, Serialize};

use super::binarize::{bit_weights, resolution, slack_bit_count, truncated_bits};
use super::layout::{ConstraintId, DecisionBlock, DecisionKey, SlackBlock, VariableLayout};
use super::normalize::normalization_factor;
use super::qubo::{EncodedTerm, Poly, QuboModel};
use super::weights::PenaltyWeights;
use super::EncodeError;
use crate::model::{omega_matrix, CollateralInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoEncoding {
    Balanced,
    Unbalanced,
}

impl CoEncoding {
    pub fn name(self) -> &'static str {
        match self {
            CoEncoding::Balanced => "balanced",
            CoEncoding::Unbalanced => "unbalanced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoEncodingOptions {
    /// Bits per allocation `B`.
    pub bits: u32,
    /// Scale each term by its normalisation factor before weighting.
    pub normalize: bool,
    /// Multiply cost coefficients by the asset quantity.
    pub cost_quantity_weighted: bool,
}

impl Default for CoEncodingOptions {
    fn default() -> Self {
        Self {
            bits: 7,
            normalize: false,
            cost_quantity_weighted: false,
        }
    }
}

impl CoEncodingOptions {
    pub fn with_bits(bits: u32) -> Self {
        Self {
            bits,
            ..Self::default()
        }
    }
}

type Linear = Vec<(usize, f64)>;

/// Decision layout plus, per pair, the bit/weight list of `q_ij`.
struct Grid {
    layout: VariableLayout,
    q: Vec<Vec<Linear>>,
    resolution: u64,
}

fn decision_grid(instance: &CollateralInstance, bits: u32) -> Result<Grid, EncodeError> {
    let weights = bit_weights(bits, 0.0, 1.0)?;
    let res = resolution(bits);
    let (n, m) = (instance.n_assets(), instance.n_accounts());
    let mut next = 0;
    let mut decision = Vec::with_capacity(n * m);
    let mut q = vec![vec![Vec::new(); m]; n];
    for (i, q_row) in q.iter_mut().enumerate() {
        for (j, q_ij) in q_row.iter_mut().enumerate() {
            let width = match instance.limit(i, j) {
                Some(limit) => truncated_bits(limit, instance.assets[i].quantity, res, bits),
                None => bits,
            } as usize;
            let idx: Vec<usize> = (next..next + width).collect();
            next += width;
            *q_ij = idx.iter().copied().zip(weights.iter().copied()).collect();
            decision.push(DecisionBlock {
                key: DecisionKey::Pair {
                    asset: i,
                    account: j,
                },
                bits: idx,
                weights: weights[..width].to_vec(),
                lower: 0.0,
                range: 1.0,
                resolution: res,
            });
        }
    }
    Ok(Grid {
        layout: VariableLayout {
            decision,
            slack: Vec::new(),
            total: next,
        },
        q,
        resolution: res,
    })
}

fn scaled(terms: &[(usize, f64)], factor: f64) -> Linear {
    terms.iter().map(|&(b, p)| (b, p * factor)).collect()
}

fn cost_poly(instance: &CollateralInstance, grid: &Grid, quantity_weighted: bool) -> Poly<f64> {
    let omega = omega_matrix(instance);
    let mut p = Poly::new();
    for (i, row) in grid.q.iter().enumerate() {
        let a = if quantity_weighted {
            instance.assets[i].quantity
        } else {
            1.0
        };
        for (j, q_ij) in row.iter().enumerate() {
            p.add_affine(omega[i][j] * a, q_ij, 0.0);
        }
    }
    p
}

/// `sum_i q_ij * collateral_value(i, j)` for account `j`.
fn posted_value(instance: &CollateralInstance, grid: &Grid, j: usize) -> Linear {
    (0..instance.n_assets())
        .flat_map(|i| scaled(&grid.q[i][j], instance.collateral_value(i, j)))
        .collect()
}

/// `sum_j q_ij` for asset `i`.
fn asset_usage(grid: &Grid, i: usize) -> Linear {
    grid.q[i].iter().flatten().copied().collect()
}

/// Members of group `g` and their posted quantity to account `j`.
fn group_quantity(instance: &CollateralInstance, grid: &Grid, g: usize, j: usize) -> Linear {
    let groups = instance.groups.as_ref().expect("groups present");
    (0..instance.n_assets())
        .filter(|&i| groups.membership[i][g] == 1)
        .flat_map(|i| scaled(&grid.q[i][j], instance.assets[i].quantity))
        .collect()
}

fn group_pairs(instance: &CollateralInstance) -> Vec<(usize, usize, f64)> {
    let Some(groups) = &instance.groups else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (g, caps) in groups.caps.iter().enumerate() {
        if !(0..instance.n_assets()).any(|i| groups.membership[i][g] == 1) {
            continue;
        }
        for (j, &cap) in caps.iter().enumerate() {
            out.push((g, j, cap));
        }
    }
    out
}

fn reachability_warnings(instance: &CollateralInstance, grid: &Grid) -> Vec<String> {
    let mut warnings = Vec::new();
    for (j, acc) in instance.accounts.iter().enumerate() {
        let reachable: f64 = (0..instance.n_assets())
            .map(|i| {
                grid.layout
                    .pair(i, j)
                    .map_or(0.0, |b| b.max_value() * instance.collateral_value(i, j))
            })
            .sum();
        if reachable < acc.exposure * (1.0 - 1e-12) {
            warnings.push(format!(
                "account {j}: exposure {} exceeds the largest representable posting {reachable}",
                acc.exposure
            ));
        }
    }
    warnings
}

fn assemble(
    named: Vec<(&str, f64, Poly<f64>)>,
    normalize: bool,
    layout: VariableLayout,
    mut warnings: Vec<String>,
) -> Result<QuboModel<f64>, EncodeError> {
    let mut terms = Vec::with_capacity(named.len());
    for (name, lambda, poly) in named {
        let normalization = if normalize {
            normalization_factor(&poly.coefficient_magnitudes()).unwrap_or_else(|| {
                warnings.push(format!("term {name} has no nonzero coefficient; left unscaled"));
                1.0
            })
        } else {
            1.0
        };
        terms.push(EncodedTerm {
            name: name.to_string(),
            lambda,
            normalization,
            poly,
        });
    }
    let mut total = Poly::new();
    for t in &terms {
        total.accumulate(&t.poly, t.lambda * t.normalization);
    }
    Ok(total
        .into_model(layout)?
        .with_terms(terms)
        .with_warnings(warnings))
}

fn require_positive(weights: &PenaltyWeights, k: usize) -> Result<f64, EncodeError> {
    let v = weights.get(k)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(EncodeError::Domain(format!("lambda_{k} must be > 0")))
    }
}

/// Slack-based encoding:
/// `l0 cost + l1 sum_i (M sum_j q_ij - M + S_i)^2 + l2 sum_j (posted_j - c_j)^2
///  + l3 sum_{g,j} (group_gj - K_gj + S_gj)^2`.
/// Exposure is relaxed to an equality and carries no slack.
pub fn co_qubo_balanced(
    instance: &CollateralInstance,
    bits: u32,
    weights: &PenaltyWeights,
) -> Result<QuboModel<f64>, EncodeError> {
    co_qubo_balanced_with(instance, &CoEncodingOptions::with_bits(bits), weights)
}

pub fn co_qubo_balanced_with(
    instance: &CollateralInstance,
    options: &CoEncodingOptions,
    weights: &PenaltyWeights,
) -> Result<QuboModel<f64>, EncodeError> {
    instance.validate()?;
    let l0 = require_positive(weights, 0)?;
    let l1 = require_positive(weights, 1)?;
    let l2 = require_positive(weights, 2)?;
    let groups = group_pairs(instance);
    let l3 = if groups.is_empty() {
        0.0
    } else {
        require_positive(weights, 3)?
    };

    let mut grid = decision_grid(instance, options.bits)?;
    let warnings = reachability_warnings(instance, &grid);
    let m_res = grid.resolution as f64;
    let cost = cost_poly(instance, &grid, options.cost_quantity_weighted);

    let con_bits = slack_bit_count(m_res)? as usize;
    let mut consistency = Poly::new();
    for i in 0..instance.n_assets() {
        let start = grid.layout.total;
        let idx: Vec<usize> = (start..start + con_bits).collect();
        let w: Vec<f64> = (0..con_bits).map(|k| 2f64.powi(k as i32)).collect();
        grid.layout.total += con_bits;
        let mut lhs = scaled(&asset_usage(&grid, i), m_res);
        lhs.extend(idx.iter().copied().zip(w.iter().copied()));
        consistency.add_square(1.0, &lhs, -m_res);
        grid.layout.slack.push(SlackBlock {
            constraint: ConstraintId::Consistency { asset: i },
            bits: idx,
            weights: w,
        });
    }

    let mut exposure = Poly::new();
    for (j, acc) in instance.accounts.iter().enumerate() {
        exposure.add_square(1.0, &posted_value(instance, &grid, j), -acc.exposure);
    }

    let mut named = vec![
        ("cost", l0, cost),
        ("consistency", l1, consistency),
        ("exposure", l2, exposure),
    ];

    if !groups.is_empty() {
        let membership = &instance.groups.as_ref().unwrap().membership;
        let mut group = Poly::new();
        for (g, j, cap) in groups {
            let step = (0..instance.n_assets())
                .filter(|&i| membership[i][g] == 1)
                .map(|i| instance.assets[i].quantity)
                .filter(|&a| a > 0.0)
                .fold(f64::INFINITY, f64::min)
                / m_res;
            let mut lhs = group_quantity(instance, &grid, g, j);
            if step.is_finite() {
                let nbits = slack_bit_count(cap / step + 1.0)? as usize;
                let start = grid.layout.total;
                let idx: Vec<usize> = (start..start + nbits).collect();
                let w: Vec<f64> = (0..nbits).map(|k| step * 2f64.powi(k as i32)).collect();
                grid.layout.total += nbits;
                lhs.extend(idx.iter().copied().zip(w.iter().copied()));
                grid.layout.slack.push(SlackBlock {
                    constraint: ConstraintId::Group { group: g, account: j },
                    bits: idx,
                    weights: w,
                });
            }
            group.add_square(1.0, &lhs, -cap);
        }
        named.push(("group", l3, group));
    }

    assemble(named, options.normalize, grid.layout, warnings)
}

/// Slack-free encoding with linear plus quadratic penalties per constraint:
/// `l0 cost + l1 sum_i h_i + l2 sum_i h_i^2 - l3 sum_j g_j + l4 sum_j g_j^2
///  + l5 sum k_gj + l6 sum k_gj^2` where `h_i = sum_j q_ij - 1`,
/// `g_j = posted_j - c_j` and `k_gj = group_gj - K_gj`.
pub fn co_qubo_unbalanced(
    instance: &CollateralInstance,
    bits: u32,
    weights: &PenaltyWeights,
) -> Result<QuboModel<f64>, EncodeError> {
    co_qubo_unbalanced_with(instance, &CoEncodingOptions::with_bits(bits), weights)
}

pub fn co_qubo_unbalanced_with(
    instance: &CollateralInstance,
    options: &CoEncodingOptions,
    weights: &PenaltyWeights,
) -> Result<QuboModel<f64>, EncodeError> {
    instance.validate()?;
    let lam: Vec<f64> = (0..5).map(|k| weights.get(k)).collect::<Result<_, _>>()?;
    let groups = group_pairs(instance);

    let grid = decision_grid(instance, options.bits)?;
    let warnings = reachability_warnings(instance, &grid);
    let cost = cost_poly(instance, &grid, options.cost_quantity_weighted);

    let mut cons_lin = Poly::new();
    let mut cons_quad = Poly::new();
    for i in 0..instance.n_assets() {
        let usage = asset_usage(&grid, i);
        cons_lin.add_affine(1.0, &usage, -1.0);
        cons_quad.add_square(1.0, &usage, -1.0);
    }

    let mut exp_lin = Poly::new();
    let mut exp_quad = Poly::new();
    for (j, acc) in instance.accounts.iter().enumerate() {
        let posted = posted_value(instance, &grid, j);
        // Lower-bound constraint: the linear term rewards exceeding it.
        exp_lin.add_affine(-1.0, &posted, -acc.exposure);
        exp_quad.add_square(1.0, &posted, -acc.exposure);
    }

    let mut named = vec![
        ("cost", lam[0], cost),
        ("consistency_linear", lam[1], cons_lin),
        ("consistency_quadratic", lam[2], cons_quad),
        ("exposure_linear", lam[3], exp_lin),
        ("exposure_quadratic", lam[4], exp_quad),
    ];

    if !groups.is_empty() {
        let l5 = weights.get(5)?;
        let l6 = weights.get(6)?;
        let mut grp_lin = Poly::new();
        let mut grp_quad = Poly::new();
        for (g, j, cap) in groups {
            let lhs = group_quantity(instance, &grid, g, j);
            grp_lin.add_affine(1.0, &lhs, -cap);
            grp_quad.add_square(1.0, &lhs, -cap);
        }
        named.push(("group_linear", l5, grp_lin));
        named.push(("group_quadratic", l6, grp_quad));
    }

    assemble(named, options.normalize, grid.layout, warnings)
}

pub fn co_qubo(
    encoding: CoEncoding,
    instance: &CollateralInstance,
    options: &CoEncodingOptions,
    weights: &PenaltyWeights,
) -> Result<QuboModel<f64>, EncodeError> {
    match encoding {
        CoEncoding::Balanced => co_qubo_balanced_with(instance, options, weights),
        CoEncoding::Unbalanced => co_qubo_unbalanced_with(instance, options, weights),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{decode_solution, evaluate_allocation, Account, Asset, Duration, Groups};

    fn single_pair(exposure: f64) -> CollateralInstance {
        CollateralInstance::new(
            vec![Asset {
                quantity: 100.0,
                unit_value: 1.0,
                tier: 0.2,
            }],
            vec![Account {
                exposure,
                duration: Duration::Long,
            }],
            vec![vec![1.0]],
        )
        .unwrap()
    }

    fn two_by_two() -> CollateralInstance {
        let mut inst = CollateralInstance::new(
            vec![
                Asset {
                    quantity: 50.0,
                    unit_value: 2.0,
                    tier: 0.8,
                },
                Asset {
                    quantity: 30.0,
                    unit_value: 1.0,
                    tier: 0.2,
                },
            ],
            vec![
                Account {
                    exposure: 40.0,
                    duration: Duration::Short,
                },
                Account {
                    exposure: 20.0,
                    duration: Duration::Long,
                },
            ],
            vec![vec![0.9, 1.0], vec![1.0, 0.95]],
        )
        .unwrap();
        inst.limits[1][0] = Some(12.0);
        inst
    }

    #[test]
    fn balanced_layout() {
        let inst = two_by_two();
        let q = co_qubo_balanced(&inst, 3, &PenaltyWeights::balanced(1.0, 1.0, 1.0, 1.0)).unwrap();
        // limit 12 on 30 units: floor(log2(0.4 * 7)) = 1 bit
        assert_eq!(q.layout().pair(1, 0).unwrap().bits.len(), 1);
        assert_eq!(q.layout().decision_bit_count(), 3 + 3 + 1 + 3);
        assert_eq!(q.layout().slack_bit_count(), 2 * 3);
        assert!(q.layout().is_consistent());
    }

    #[test]
    fn balanced_zero_state() {
        let inst = two_by_two();
        let w = PenaltyWeights::balanced(2.0, 3.0, 5.0, 1.0);
        let q = co_qubo_balanced(&inst, 3, &w).unwrap();
        let x = vec![0u8; q.dimension()];
        let c2: f64 = inst.accounts.iter().map(|a| a.exposure * a.exposure).sum();
        // all slack bits zero: each asset contributes (0 - 7)^2
        let expected = 5.0 * c2 + 3.0 * 2.0 * 49.0;
        assert!((q.energy(&x) - expected).abs() < 1e-9);
        assert_eq!(q.term("exposure").unwrap().raw_value(&x), c2);
    }

    #[test]
    fn cost_term_matches_allocation_objective() {
        let inst = two_by_two();
        let q = co_qubo_balanced_with(
            &inst,
            &CoEncodingOptions {
                bits: 3,
                normalize: true,
                cost_quantity_weighted: false,
            },
            &PenaltyWeights::balanced(7.0, 1.0, 1.0, 1.0),
        )
        .unwrap();
        let cost = q.term("cost").unwrap();
        for seed in 0..64u64 {
            let x: Vec<u8> = (0..q.dimension())
                .map(|k| ((seed * 2654435761 >> (k % 32)) & 1) as u8)
                .collect();
            let alloc = decode_solution(&x, q.layout(), &inst).unwrap();
            let obj = evaluate_allocation(&alloc, &inst, 0.05).unwrap().objective;
            let weighted = cost.lambda * cost.normalization * cost.raw_value(&x);
            let recovered = weighted / (cost.lambda * cost.normalization);
            assert!((recovered - obj).abs() < 1e-12);
        }
    }

    #[test]
    fn unbalanced_zero_state() {
        let inst = two_by_two();
        let w = PenaltyWeights::unbalanced(1.0, 2.0, 3.0, 0.5, 0.25, 0.0, 0.0);
        let q = co_qubo_unbalanced(&inst, 3, &w).unwrap();
        assert_eq!(q.dimension(), q.layout().decision_bit_count());
        let x = vec![0u8; q.dimension()];
        let n = 2.0;
        let c: f64 = inst.total_exposure();
        let c2: f64 = inst.accounts.iter().map(|a| a.exposure * a.exposure).sum();
        let expected = 2.0 * -n + 3.0 * n + 0.5 * c + 0.25 * c2;
        assert!((q.energy(&x) - expected).abs() < 1e-9);
    }

    #[test]
    fn unreachable_exposure_warns() {
        let inst = single_pair(150.0);
        let q = co_qubo_balanced(&inst, 3, &PenaltyWeights::balanced(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(q.warnings().len(), 1);
        let inst = single_pair(50.0);
        let q = co_qubo_balanced(&inst, 3, &PenaltyWeights::balanced(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert!(q.warnings().is_empty());
    }

    #[test]
    fn group_slack_blocks() {
        let mut inst = two_by_two();
        inst.groups = Some(Groups {
            membership: vec![vec![1], vec![1]],
            caps: vec![vec![40.0, 10.0]],
        });
        let q = co_qubo_balanced(&inst, 3, &PenaltyWeights::balanced(1.0, 1.0, 1.0, 1.0)).unwrap();
        let groups: Vec<_> = q
            .layout()
            .slack
            .iter()
            .filter(|s| matches!(s.constraint, ConstraintId::Group { .. }))
            .collect();
        assert_eq!(groups.len(), 2);
        // step = 30 / 7; cap 40 -> ceil(log2(40 / step + 1)) = 4 bits
        assert_eq!(groups[0].bits.len(), 4);
        assert!(q.layout().is_consistent());
        assert!(co_qubo_balanced(&inst, 3, &PenaltyWeights::new(vec![1.0; 3]).unwrap()).is_err());
    }

    #[test]
    fn missing_weights_rejected() {
        let inst = single_pair(50.0);
        assert!(co_qubo_unbalanced(&inst, 3, &PenaltyWeights::new(vec![1.0; 4]).unwrap()).is_err());
        assert!(co_qubo_balanced(&inst, 3, &PenaltyWeights::balanced(0.0, 1.0, 1.0, 1.0)).is_err());
    }
}
