use std::collections::BTreeMap;

use super::layout::VariableLayout;
use super::qubo::QuboModel;
use crate::scalar::Scalar;

/// `H(s) = -sum_j h_j s_j - sum_{j<k} J_jk s_j s_k + epsilon`, `s in {-1, +1}^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel<S> {
    pub h: Vec<S>,
    pub j: BTreeMap<(usize, usize), S>,
    pub epsilon: S,
}

impl<S: Scalar> IsingModel<S> {
    pub fn dimension(&self) -> usize {
        self.h.len()
    }

    pub fn energy(&self, spins: &[i8]) -> S {
        let mut e = self.epsilon;
        for (h, &s) in self.h.iter().zip(spins) {
            e -= *h * S::lit(s as f64);
        }
        for (&(a, b), &c) in &self.j {
            e -= c * S::lit((spins[a] * spins[b]) as f64);
        }
        e
    }
}

/// Spin image of a bitstring under `x = (1 - s) / 2`, i.e. `s = 1 - 2x`.
pub fn spins_of(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect()
}

/// Substitutes `x_i = (1 - s_i) / 2` into the QUBO.
pub fn qubo_to_ising<S: Scalar>(q: &QuboModel<S>) -> IsingModel<S> {
    let half = S::lit(0.5);
    let quarter = S::lit(0.25);
    let mut h: Vec<S> = q.linear().iter().map(|&a| a * half).collect();
    let mut epsilon = q.offset() + q.linear().iter().map(|&a| a * half).sum::<S>();
    let mut j = BTreeMap::new();
    for (&(a, b), &c) in q.quadratic() {
        let c4 = c * quarter;
        h[a] += c4;
        h[b] += c4;
        epsilon += c4;
        j.insert((a, b), -c4);
    }
    IsingModel { h, j, epsilon }
}

/// Inverse of [`qubo_to_ising`], via `s_i = 1 - 2 x_i`. The returned model has
/// a bare layout (no decision or slack blocks).
pub fn ising_to_qubo<S: Scalar>(ising: &IsingModel<S>) -> QuboModel<S> {
    let two = S::lit(2.0);
    let four = S::lit(4.0);
    let mut linear: Vec<S> = ising.h.iter().map(|&h| two * h).collect();
    let mut offset = ising.epsilon - ising.h.iter().copied().sum::<S>();
    let mut quadratic = BTreeMap::new();
    for (&(a, b), &c) in &ising.j {
        offset -= c;
        linear[a] += two * c;
        linear[b] += two * c;
        quadratic.insert((a, b), -four * c);
    }
    let layout = VariableLayout {
        total: linear.len(),
        ..VariableLayout::default()
    };
    QuboModel::new(linear, quadratic, offset, layout).expect("Ising keys are ordered pairs")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(linear: Vec<f64>, quad: &[((usize, usize), f64)], offset: f64) -> QuboModel<f64> {
        let layout = VariableLayout {
            total: linear.len(),
            ..VariableLayout::default()
        };
        QuboModel::new(linear, quad.iter().cloned().collect(), offset, layout).unwrap()
    }

    #[test]
    fn single_variable() {
        let ising = qubo_to_ising(&model(vec![1.0], &[], 0.0));
        assert_eq!(ising.h, vec![0.5]);
        assert_eq!(ising.epsilon, 0.5);
        assert!(ising.j.is_empty());
    }

    #[test]
    fn single_coupling() {
        let ising = qubo_to_ising(&model(vec![0.0, 0.0], &[((0, 1), 4.0)], 0.0));
        assert_eq!(ising.j.get(&(0, 1)), Some(&-1.0));
        assert_eq!(ising.h, vec![1.0, 1.0]);
        assert_eq!(ising.epsilon, 1.0);
    }

    #[test]
    fn energies_agree_on_all_states() {
        let q = model(
            vec![1.0, -2.0, 0.5],
            &[((0, 1), 3.0), ((0, 2), -1.5), ((1, 2), 0.25)],
            -0.75,
        );
        let ising = qubo_to_ising(&q);
        for mask in 0..8u8 {
            let x: Vec<u8> = (0..3).map(|k| (mask >> k) & 1).collect();
            assert!((q.energy(&x) - ising.energy(&spins_of(&x))).abs() < 1e-12);
        }
        let back = ising_to_qubo(&ising);
        assert_eq!(back.linear(), q.linear());
        assert_eq!(back.quadratic(), q.quadratic());
        assert_eq!(back.offset(), q.offset());
    }
}
