//! Dense triple-loop co-occurrence and proximity.

use std::collections::BTreeSet;

/// Co-occurrence counts `m[f][g]` = number of membership sets containing both
/// `f` and `g`. The diagonal therefore counts the members of each field.
pub fn cooccurrence(members: &[BTreeSet<usize>], n_fields: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; n_fields]; n_fields];
    for f in 0..n_fields {
        for g in 0..n_fields {
            for set in members {
                if set.contains(&f) && set.contains(&g) {
                    m[f][g] += 1;
                }
            }
        }
    }
    m
}

/// Conditional-probability matrix `phi[f][g]` = `m[f][g] / |members of g|`,
/// with zero columns left at zero.
pub fn proximity(members: &[BTreeSet<usize>], n_fields: usize) -> Vec<Vec<f64>> {
    let m = cooccurrence(members, n_fields);
    let mut counts = vec![0u64; n_fields];
    for (g, count) in counts.iter_mut().enumerate() {
        for set in members {
            if set.contains(&g) {
                *count += 1;
            }
        }
    }
    let mut phi = vec![vec![0.0f64; n_fields]; n_fields];
    for f in 0..n_fields {
        for g in 0..n_fields {
            if counts[g] > 0 {
                phi[f][g] = m[f][g] as f64 / counts[g] as f64;
            }
        }
    }
    phi
}
