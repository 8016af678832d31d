//! Exhaustive maximum spanning forest search for small graphs.

use std::collections::{BTreeSet, HashMap};

/// Maximum total weight over all spanning forests of the positive-weight
/// graph on `n` nodes, found per connected component by trying every edge
/// subset of size (component size - 1). Exponential; keep `n` small.
pub fn max_forest_weight(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let edges: Vec<(usize, usize, f64)> = edges.iter().copied().filter(|e| e.2 > 0.0).collect();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for &(a, b, _) in &edges {
            let m = label[a].min(label[b]);
            if label[a] != m {
                label[a] = m;
                changed = true;
            }
            if label[b] != m {
                label[b] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let roots: BTreeSet<usize> = label.iter().copied().collect();
    let mut total = 0.0;
    for r in roots {
        let nodes: Vec<usize> = (0..n).filter(|&v| label[v] == r).collect();
        if nodes.len() <= 1 {
            continue;
        }
        let comp_edges: Vec<(usize, usize, f64)> = edges
            .iter()
            .copied()
            .filter(|&(a, _, _)| label[a] == r)
            .collect();
        let mut best = f64::NEG_INFINITY;
        let mut chosen = Vec::new();
        search(
            &comp_edges,
            0,
            nodes.len() - 1,
            &mut chosen,
            &nodes,
            &mut best,
        );
        total += best;
    }
    total
}

fn search(
    edges: &[(usize, usize, f64)],
    start: usize,
    need: usize,
    chosen: &mut Vec<(usize, usize, f64)>,
    nodes: &[usize],
    best: &mut f64,
) {
    if need == 0 {
        if spans(chosen, nodes) {
            let w: f64 = chosen.iter().map(|e| e.2).sum();
            if w > *best {
                *best = w;
            }
        }
        return;
    }
    if start + need > edges.len() {
        return;
    }
    for i in start..=(edges.len() - need) {
        chosen.push(edges[i]);
        search(edges, i + 1, need - 1, chosen, nodes, best);
        chosen.pop();
    }
}

/// True when `chosen` has exactly |nodes| - 1 edges and connects all of them,
/// i.e. every union merges two distinct trees.
fn spans(chosen: &[(usize, usize, f64)], nodes: &[usize]) -> bool {
    let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b, _) in chosen {
        let ra = find(&mut parent, local[&a]);
        let rb = find(&mut parent, local[&b]);
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    chosen.len() == nodes.len() - 1
}
