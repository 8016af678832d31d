//! Quadratic-time and rank-based AUC references.

/// AUC by exhaustive comparison of every (positive, negative) pair, with half
/// credit for score ties. `None` when either class is empty.
pub fn pair_counting(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let mut wins = 0u64;
    let mut ties = 0u64;
    let mut n1 = 0u64;
    let mut n0 = 0u64;
    for (i, &pos) in labels.iter().enumerate() {
        if !pos {
            n0 += 1;
            continue;
        }
        n1 += 1;
        for (j, &other) in labels.iter().enumerate() {
            if other {
                continue;
            }
            if scores[i] > scores[j] {
                wins += 1;
            } else if scores[i] == scores[j] {
                ties += 1;
            }
        }
    }
    if n1 == 0 || n0 == 0 {
        return None;
    }
    Some((wins as f64 + 0.5 * ties as f64) / (n1 as f64 * n0 as f64))
}

/// Mann-Whitney AUC via average ranks: U = R1 - n1(n1+1)/2, AUC = U/(n1*n0).
pub fn rank_based(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n = scores.len();
    assert_eq!(n, labels.len());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg_rank;
        }
        i = j + 1;
    }
    let n1 = labels.iter().filter(|&&l| l).count();
    let n0 = n - n1;
    if n1 == 0 || n0 == 0 {
        return None;
    }
    let r1: f64 = (0..n).filter(|&k| labels[k]).map(|k| ranks[k]).sum();
    let u = r1 - (n1 as f64) * (n1 as f64 + 1.0) / 2.0;
    Some(u / (n1 as f64 * n0 as f64))
}

/// Area under a piecewise-linear curve by the trapezoid rule.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}
