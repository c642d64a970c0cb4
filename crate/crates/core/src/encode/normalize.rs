use crate::scalar::Scalar;

/// Scale factor for one term: divide by the largest magnitude, then multiply
/// by the power of ten that brings the smallest magnitude into `[1, 10)`.
/// Returns `None` when the term has no nonzero coefficient.
pub fn normalization_factor<S: Scalar>(coefficients: &[S]) -> Option<S> {
    let mags = coefficients
        .iter()
        .map(|c| c.abs())
        .filter(|c| !c.is_zero() && c.is_finite());
    let (lo, hi) = mags.fold(None, |acc: Option<(S, S)>, c| {
        Some(acc.map_or((c, c), |(lo, hi)| (lo.min(c), hi.max(c))))
    })?;
    let ratio = (lo / hi).as_f64();
    // ceil(-log10 r) == -floor(log10 r); the nudge keeps exact powers of ten
    // from rounding up a decade.
    let decades = (-ratio.log10() - 1e-9).ceil().max(0.0);
    Some(S::lit(10f64.powf(decades)) / hi)
}

/// Normalisation factors for a list of terms; all-zero terms get factor 1.
pub fn normalize_terms<S: Scalar>(terms: &[Vec<S>]) -> Vec<S> {
    terms
        .iter()
        .map(|t| normalization_factor(t).unwrap_or_else(S::one))
        .collect()
}
