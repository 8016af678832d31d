//! Literal two-loop relatedness density.

/// `omega[s][f]` = sum of `phi[f][g]` over fields `g` flagged in `u[s]`,
/// divided by the full row sum of `phi[f]`. Rows of `phi` with zero sum give
/// zero density. Addends are visited in ascending `g`, matching the order the
/// production code must use for the exact-equality checks.
pub fn dense(u: &[Vec<bool>], phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = phi.len();
    u.iter()
        .map(|row| {
            assert_eq!(row.len(), n);
            (0..n)
                .map(|f| {
                    let mut num = 0.0f64;
                    let mut den = 0.0f64;
                    for g in 0..n {
                        if row[g] {
                            num += phi[f][g];
                        }
                        den += phi[f][g];
                    }
                    if den > 0.0 {
                        num / den
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}
