//! Bit-width arithmetic for slack and decision variables.

use super::EncodeError;

/// Number of log-encoded slack bits for a constraint with upper bound `u`:
/// `ceil(log2 u)`, at least one.
pub fn slack_bit_count(upper_bound: f64) -> Result<u32, EncodeError> {
    if !(upper_bound > 0.0) || !upper_bound.is_finite() {
        return Err(EncodeError::Domain(format!(
            "slack upper bound must be positive and finite, got {upper_bound}"
        )));
    }
    // Smallest k with 2^k >= u; avoids log2 rounding at exact powers of two.
    let mut k = 0u32;
    while 2f64.powi(k as i32) < upper_bound {
        k += 1;
    }
    Ok(k.max(1))
}

/// `2^B - 1`, the largest code a `bits`-wide block can hold.
pub fn resolution(bits: u32) -> u64 {
    (1u64 << bits) - 1
}

/// Geometric bit weights `p_b = 2^(b-1) (qmax - qmin) / (2^B - 1)`, b = 1..B.
pub fn bit_weights(bits: u32, qmin: f64, qmax: f64) -> Result<Vec<f64>, EncodeError> {
    if bits == 0 || bits > 52 {
        return Err(EncodeError::Domain(format!(
            "bit width must be in 1..=52, got {bits}"
        )));
    }
    if !(qmax > qmin) {
        return Err(EncodeError::Domain(format!(
            "empty interval [{qmin}, {qmax}]"
        )));
    }
    let m = resolution(bits) as f64;
    let range = qmax - qmin;
    Ok((0..bits)
        .map(|b| 2f64.powi(b as i32) * range / m)
        .collect())
}

/// Bits kept for a pair with a one-to-one quantity limit so that no decodable
/// allocation exceeds it: `min(B, floor(log2(limit / quantity * M)))`, or `B`
/// when the limit does not bind and 0 when not even one grid step fits.
pub fn truncated_bits(limit: f64, quantity: f64, resolution: u64, bits: u32) -> u32 {
    if !(quantity > 0.0) {
        return bits;
    }
    let ratio = limit / quantity;
    if ratio >= 1.0 {
        return bits;
    }
    let scaled = ratio * resolution as f64;
    if scaled < 1.0 {
        return 0;
    }
    // Largest n with 2^n <= scaled.
    let mut n = 0u32;
    while 2f64.powi(n as i32 + 1) <= scaled {
        n += 1;
    }
    n.min(bits)
}
