//! Linear-interpolation (type 7) quantiles.

/// Quantile of ascending-sorted data at probability `p` in [0, 1], using the
/// h = (n - 1) p interpolation rule.
pub fn type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
