use serde::{Deserialize, Serialize};

/// What a block of decision bits represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionKey {
    /// A knapsack item (single bit).
    Item { item: usize },
    /// The fractional allocation of `asset` to `account`.
    Pair { asset: usize, account: usize },
}

/// Constraint a slack block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintId {
    Capacity,
    Consistency { asset: usize },
    Group { group: usize, account: usize },
}

/// Binary expansion of one bounded quantity: `value = lower + code * range / resolution`
/// where `code = sum_k 2^k x[bits[k]]`. `weights[k]` is the coefficient of
/// bit `k` in that expansion, `2^k * range / resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionBlock {
    pub key: DecisionKey,
    pub bits: Vec<usize>,
    pub weights: Vec<f64>,
    pub lower: f64,
    pub range: f64,
    pub resolution: u64,
}

impl DecisionBlock {
    /// Integer code of the block in `state`.
    pub fn code(&self, state: &[u8]) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| state[b] != 0)
            .map(|(k, _)| 1u64 << k)
            .sum()
    }

    /// Decoded value; `code / resolution` is formed before scaling so the
    /// all-ones full-width block decodes to exactly `lower + range`.
    pub fn value(&self, state: &[u8]) -> f64 {
        self.value_of_code(self.code(state))
    }

    pub fn max_value(&self) -> f64 {
        self.value_of_code((1u64 << self.bits.len()) - 1)
    }

    fn value_of_code(&self, code: u64) -> f64 {
        self.lower + self.range * (code as f64 / self.resolution as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackBlock {
    pub constraint: ConstraintId,
    pub bits: Vec<usize>,
    pub weights: Vec<f64>,
}

impl SlackBlock {
    pub fn value(&self, state: &[u8]) -> f64 {
        self.bits
            .iter()
            .zip(&self.weights)
            .filter(|(&b, _)| state[b] != 0)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Assignment of QUBO variable indices to decision and slack quantities.
/// Decision bits always occupy the prefix `0..decision_bit_count()`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub decision: Vec<DecisionBlock>,
    pub slack: Vec<SlackBlock>,
    pub total: usize,
}

impl VariableLayout {
    pub fn decision_bit_count(&self) -> usize {
        self.decision.iter().map(|b| b.bits.len()).sum()
    }

    pub fn slack_bit_count(&self) -> usize {
        self.slack.iter().map(|b| b.bits.len()).sum()
    }

    pub fn pair(&self, asset: usize, account: usize) -> Option<&DecisionBlock> {
        self.decision
            .iter()
            .find(|b| b.key == DecisionKey::Pair { asset, account })
    }

    /// Checks that the blocks partition `0..total` with decision bits first.
    pub fn is_consistent(&self) -> bool {
        let mut seen = vec![false; self.total];
        let d = self.decision_bit_count();
        for b in self.decision.iter().flat_map(|blk| &blk.bits) {
            if *b >= d || seen[*b] {
                return false;
            }
            seen[*b] = true;
        }
        for b in self.slack.iter().flat_map(|blk| &blk.bits) {
            if *b >= self.total || seen[*b] {
                return false;
            }
            seen[*b] = true;
        }
        seen.into_iter().all(|s| s)
    }
}
