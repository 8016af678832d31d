//! Simple regression via the raw normal equations.

/// Least-squares fit of `y = slope * x + intercept` from the uncentered sums,
/// returning `(slope, intercept, r_squared)` with r^2 as the squared Pearson
/// correlation. Assumes non-degenerate x variance.
pub fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let num = n * sxy - sx * sy;
    let den = (n * sxx - sx * sx) * (n * syy - sy * sy);
    let r2 = if den > 0.0 { num * num / den } else { 0.0 };
    (slope, intercept, r2)
}
