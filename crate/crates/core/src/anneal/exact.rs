use super::AnnealError;
use crate::encode::QuboModel;
use crate::model::KnapsackInstance;
use crate::scalar::Scalar;

pub const DEFAULT_MAX_BITS: usize = 24;

/// Exact 0/1 knapsack optimum and the lexicographically smallest optimal
/// selection.
pub fn kp_exact_dp(instance: &KnapsackInstance) -> (u64, Vec<u8>) {
    kp_dp(instance.weights(), instance.values(), instance.capacity())
}

/// Slice form of [`kp_exact_dp`]; accepts zero items.
pub fn kp_dp(weights: &[u64], values: &[u64], capacity: u64) -> (u64, Vec<u8>) {
    assert_eq!(weights.len(), values.len(), "weights and values differ in length");
    let n = weights.len();
    let cap = capacity as usize;
    // suffix[i][c]: best value from items i.. with capacity c
    let mut suffix = vec![vec![0u64; cap + 1]; n + 1];
    for i in (0..n).rev() {
        let (w, v) = (weights[i] as usize, values[i]);
        for c in 0..=cap {
            let skip = suffix[i + 1][c];
            suffix[i][c] = if w <= c {
                skip.max(suffix[i + 1][c - w] + v)
            } else {
                skip
            };
        }
    }
    let mut selection = vec![0u8; n];
    let mut c = cap;
    for i in 0..n {
        if suffix[i][c] != suffix[i + 1][c] {
            selection[i] = 1;
            c -= weights[i] as usize;
        }
    }
    (suffix[0][cap], selection)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub ground_energy: f64,
    pub ground_states: Vec<Vec<u8>>,
}

fn tie_tolerance(e: f64) -> f64 {
    1e-9 * e.abs().max(1.0)
}

const RESYNC: u64 = 1 << 16;

/// Walks all `2^N` states in Gray-code order, calling `visit(mask, energy)`.
/// Energies are updated incrementally and recomputed from scratch every
/// 65536 states to bound drift.
fn gray_walk<S: Scalar>(
    model: &QuboModel<S>,
    max_bits: usize,
    mut visit: impl FnMut(u64, f64),
) -> Result<(), AnnealError> {
    let n = model.dimension();
    if n > max_bits || n > 63 {
        return Err(AnnealError::TooLarge { n, max: max_bits.min(63) });
    }
    let mut x = vec![0u8; n];
    let mut mask = 0u64;
    let mut e = model.energy(&x);
    visit(mask, e.as_f64());
    for k in 1..(1u64 << n) {
        let flip = k.trailing_zeros() as usize;
        e += model.delta_unchecked(&x, flip);
        x[flip] ^= 1;
        mask ^= 1 << flip;
        if k % RESYNC == 0 {
            e = model.energy(&x);
        }
        visit(mask, e.as_f64());
    }
    Ok(())
}

fn unpack(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((mask >> k) & 1) as u8).collect()
}

/// Exhaustive minimum. Argmins are returned in increasing order of their
/// little-endian integer value; reported energy is recomputed exactly for
/// the first of them.
pub fn enumerate_exact<S: Scalar>(
    model: &QuboModel<S>,
    max_bits: usize,
) -> Result<ExactResult, AnnealError> {
    let mut best = f64::INFINITY;
    let mut argmin: Vec<u64> = Vec::new();
    gray_walk(model, max_bits, |mask, e| {
        if argmin.is_empty() || e < best - tie_tolerance(best) {
            best = e;
            argmin.clear();
            argmin.push(mask);
        } else if (e - best).abs() <= tie_tolerance(best) {
            argmin.push(mask);
        }
    })?;
    argmin.sort_unstable();
    let n = model.dimension();
    let ground_states: Vec<Vec<u8>> = argmin.into_iter().map(|m| unpack(m, n)).collect();
    let ground_energy = model.energy(&ground_states[0]).as_f64();
    Ok(ExactResult {
        ground_energy,
        ground_states,
    })
}

/// The `k` lowest distinct energy levels, ascending. Levels closer than
/// `1e-9` relative are merged.
pub fn lowest_levels<S: Scalar>(
    model: &QuboModel<S>,
    max_bits: usize,
    k: usize,
) -> Result<Vec<f64>, AnnealError> {
    let mut levels: Vec<f64> = Vec::with_capacity(k + 1);
    gray_walk(model, max_bits, |_, e| {
        if levels.len() == k && k > 0 && e > levels[k - 1] + tie_tolerance(levels[k - 1]) {
            return;
        }
        let pos = levels.partition_point(|&l| l < e - tie_tolerance(l));
        if pos < levels.len() && (levels[pos] - e).abs() <= tie_tolerance(e) {
            return;
        }
        levels.insert(pos, e);
        levels.truncate(k);
    })?;
    Ok(levels)
}
