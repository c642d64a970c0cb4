//! Knapsack QUBOs in the minimisation convention: the value objective enters
//! negated, penalties enter positive.

use super::binarize::slack_bit_count;
use super::layout::{ConstraintId, DecisionBlock, DecisionKey, SlackBlock, VariableLayout};
use super::qubo::{EncodedTerm, Poly, QuboModel};
use super::EncodeError;
use crate::model::KnapsackInstance;

fn item_blocks(n: usize) -> Vec<DecisionBlock> {
    (0..n)
        .map(|i| DecisionBlock {
            key: DecisionKey::Item { item: i },
            bits: vec![i],
            weights: vec![1.0],
            lower: 0.0,
            range: 1.0,
            resolution: 1,
        })
        .collect()
}

fn positive(name: &str, v: f64) -> Result<(), EncodeError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(EncodeError::Domain(format!("{name} must be > 0, got {v}")))
    }
}

fn weight_terms(kp: &KnapsackInstance) -> Vec<(usize, f64)> {
    kp.weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| (i, w as f64))
        .collect()
}

fn value_poly(kp: &KnapsackInstance, scale: f64) -> Poly<f64> {
    let mut p = Poly::new();
    for (i, &v) in kp.values().iter().enumerate() {
        p.add_linear(i, -scale * v as f64);
    }
    p
}

fn assemble(
    terms: Vec<EncodedTerm<f64>>,
    layout: VariableLayout,
) -> Result<QuboModel<f64>, EncodeError> {
    let mut total = Poly::new();
    for t in &terms {
        total.accumulate(&t.poly, t.lambda * t.normalization);
    }
    Ok(total.into_model(layout)?.with_terms(terms))
}

fn term(name: &str, lambda: f64, poly: Poly<f64>) -> EncodedTerm<f64> {
    EncodedTerm {
        name: name.into(),
        lambda,
        normalization: 1.0,
        poly,
    }
}

/// `-sum v_i x_i + lambda0 (sum w_i x_i - W + S)^2` with `S` log-encoded on
/// `ceil(log2 W)` bits (none when `W = 0`).
pub fn kp_qubo_log(kp: &KnapsackInstance, lambda0: f64) -> Result<QuboModel<f64>, EncodeError> {
    positive("lambda0", lambda0)?;
    let n = kp.len();
    let cap = kp.capacity() as f64;
    let slack_bits = if kp.capacity() == 0 {
        0
    } else {
        slack_bit_count(cap)? as usize
    };
    let slack_idx: Vec<usize> = (n..n + slack_bits).collect();
    let slack_w: Vec<f64> = (0..slack_bits).map(|k| 2f64.powi(k as i32)).collect();

    let mut lhs = weight_terms(kp);
    lhs.extend(slack_idx.iter().copied().zip(slack_w.iter().copied()));
    let mut penalty = Poly::new();
    penalty.add_square(1.0, &lhs, -cap);

    let mut slack = Vec::new();
    if slack_bits > 0 {
        slack.push(SlackBlock {
            constraint: ConstraintId::Capacity,
            bits: slack_idx,
            weights: slack_w,
        });
    }
    let layout = VariableLayout {
        decision: item_blocks(n),
        slack,
        total: n + slack_bits,
    };
    assemble(
        vec![
            term("value", 1.0, value_poly(kp, 1.0)),
            term("capacity", lambda0, penalty),
        ],
        layout,
    )
}

/// `-sum v_i x_i + lambda0 (sum w_i x_i - sum_k k s_k)^2 + lambda1 (1 - sum_k s_k)^2`
/// with one slack indicator per capacity level `k = 1..W`.
pub fn kp_qubo_onehot(
    kp: &KnapsackInstance,
    lambda0: f64,
    lambda1: f64,
) -> Result<QuboModel<f64>, EncodeError> {
    positive("lambda0", lambda0)?;
    positive("lambda1", lambda1)?;
    if kp.capacity() == 0 {
        return Err(EncodeError::Domain(
            "one-hot encoding needs capacity >= 1".into(),
        ));
    }
    let n = kp.len();
    let w = kp.capacity() as usize;
    let slack_idx: Vec<usize> = (n..n + w).collect();
    let slack_w: Vec<f64> = (1..=w).map(|k| k as f64).collect();

    let mut lhs = weight_terms(kp);
    lhs.extend(slack_idx.iter().map(|&s| (s, -((s - n + 1) as f64))));
    let mut capacity = Poly::new();
    capacity.add_square(1.0, &lhs, 0.0);

    let ones: Vec<(usize, f64)> = slack_idx.iter().map(|&s| (s, -1.0)).collect();
    let mut onehot = Poly::new();
    onehot.add_square(1.0, &ones, 1.0);

    let layout = VariableLayout {
        decision: item_blocks(n),
        slack: vec![SlackBlock {
            constraint: ConstraintId::Capacity,
            bits: slack_idx,
            weights: slack_w,
        }],
        total: n + w,
    };
    assemble(
        vec![
            term("value", 1.0, value_poly(kp, 1.0)),
            term("capacity", lambda0, capacity),
            term("one_hot", lambda1, onehot),
        ],
        layout,
    )
}

/// Slack-free penalty from the second-order expansion of `exp(h)`,
/// `h(x) = sum w_i x_i - W <= 0`:
/// `-lambda0 sum v_i x_i + lambda_lin h(x) + lambda_quad h(x)^2`.
pub fn kp_qubo_unbalanced(
    kp: &KnapsackInstance,
    lambda_lin: f64,
    lambda_quad: f64,
    lambda0: f64,
) -> Result<QuboModel<f64>, EncodeError> {
    positive("lambda_lin", lambda_lin)?;
    positive("lambda_quad", lambda_quad)?;
    positive("lambda0", lambda0)?;
    let n = kp.len();
    let cap = kp.capacity() as f64;
    let lhs = weight_terms(kp);
    let mut lin = Poly::new();
    lin.add_affine(1.0, &lhs, -cap);
    let mut quad = Poly::new();
    quad.add_square(1.0, &lhs, -cap);
    let layout = VariableLayout {
        decision: item_blocks(n),
        slack: vec![],
        total: n,
    };
    assemble(
        vec![
            term("value", lambda0, value_poly(kp, 1.0)),
            term("capacity_linear", lambda_lin, lin),
            term("capacity_quadratic", lambda_quad, quad),
        ],
        layout,
    )
}

/// Default unbalanced multipliers `(lambda_lin, lambda_quad)` for knapsack
/// instances with unit value weight.
pub const KP_UNBALANCED_DEFAULTS: (f64, f64) = (0.96, 0.0371);

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> KnapsackInstance {
        KnapsackInstance::new(vec![1, 2], vec![1, 3], 2).unwrap()
    }

    #[test]
    fn log_layout_and_energy() {
        let q = kp_qubo_log(&toy(), 10.0).unwrap();
        assert_eq!(q.dimension(), 3);
        assert_eq!(q.layout().slack_bit_count(), 1);
        assert!(q.layout().is_consistent());
        // item 2 alone, slack 0: exactly at capacity
        assert_eq!(q.energy(&[0, 1, 0]), -3.0);
        // item 1 alone, slack 1 fills the gap
        assert_eq!(q.energy(&[1, 0, 1]), -1.0);
        assert_eq!(q.energy(&[1, 1, 0]), -4.0 + 10.0);
    }

    #[test]
    fn log_empty_selection_with_full_slack() {
        let kp = KnapsackInstance::ten_item_benchmark();
        let q = kp_qubo_log(&kp, 1e4).unwrap();
        assert_eq!(q.dimension(), 18);
        let mut x = vec![0u8; 18];
        // 165 = 0b10100101
        for k in [0, 2, 5, 7] {
            x[10 + k] = 1;
        }
        assert_eq!(q.energy(&x), 0.0);
        let opt: Vec<u8> = [1, 1, 1, 1, 0, 1, 0, 0, 0, 0]
            .into_iter()
            .chain([0; 8])
            .collect();
        assert_eq!(q.energy(&opt), -309.0);
    }

    #[test]
    fn zero_capacity_has_no_slack() {
        let kp = KnapsackInstance::new(vec![3], vec![4], 0).unwrap();
        let q = kp_qubo_log(&kp, 2.0).unwrap();
        assert_eq!(q.dimension(), 1);
        assert_eq!(q.energy(&[0]), 0.0);
        assert_eq!(q.energy(&[1]), -4.0 + 18.0);
    }

    #[test]
    fn onehot_examples() {
        let kp = KnapsackInstance::new(vec![1], vec![5], 2).unwrap();
        let q = kp_qubo_onehot(&kp, 0.7, 3.0).unwrap();
        assert_eq!(q.dimension(), 3);
        assert_eq!(q.energy(&[1, 1, 0]), -5.0);
        assert_eq!(q.energy(&[0, 0, 0]), 3.0);
        assert!(kp_qubo_onehot(&KnapsackInstance::new(vec![1], vec![1], 0).unwrap(), 1.0, 1.0)
            .is_err());
    }

    #[test]
    fn onehot_benchmark_size() {
        let q = kp_qubo_onehot(&KnapsackInstance::ten_item_benchmark(), 0.1, 1e3).unwrap();
        assert_eq!(q.dimension(), 175);
    }

    #[test]
    fn unbalanced_examples() {
        let kp = KnapsackInstance::new(vec![1], vec![1], 1).unwrap();
        let q = kp_qubo_unbalanced(&kp, 0.96, 0.0371, 2.0).unwrap();
        assert_eq!(q.dimension(), 1);
        assert_eq!(q.energy(&[1]), -2.0);

        let (lin, quad) = KP_UNBALANCED_DEFAULTS;
        let kp = KnapsackInstance::new(vec![2], vec![1], 1).unwrap();
        let q = kp_qubo_unbalanced(&kp, lin, quad, 1.0).unwrap();
        assert!((q.energy(&[1]) - (lin + quad - 1.0)).abs() < 1e-12);
        assert!((q.energy(&[0]) - (-lin + quad)).abs() < 1e-12);
        assert!(q.energy(&[1]) > q.energy(&[0]));
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(kp_qubo_log(&toy(), 0.0).is_err());
        assert!(kp_qubo_unbalanced(&toy(), 1.0, -1.0, 1.0).is_err());
    }
}
