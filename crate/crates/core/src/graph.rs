//! Small directed-graph helpers over dense node indices.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Kahn's algorithm; among ready nodes the one with the smallest `key` goes
/// first. Returns `None` if the graph has a cycle.
pub fn topo_order_by_key<K: Ord + Copy>(
    n: usize,
    edges: &[(usize, usize)],
    key: impl Fn(usize) -> K,
) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(a, b) in edges {
        children[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: BinaryHeap<Reverse<(K, usize)>> = (0..n)
        .filter(|&i| indeg[i] == 0)
        .map(|i| Reverse((key(i), i)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(Reverse((key(c), c)));
            }
        }
    }
    (order.len() == n).then_some(order)
}

pub fn topo_order(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    topo_order_by_key(n, edges, |i| i)
}

/// All ancestors of each node (excluding the node itself), given parent lists.
/// Requires an acyclic graph listed so that parents can be visited first via
/// `order`.
pub fn ancestor_sets(parents: &[Vec<usize>], order: &[usize]) -> Vec<Vec<bool>> {
    let n = parents.len();
    let mut anc = vec![vec![false; n]; n];
    for &i in order {
        for &p in &parents[i] {
            anc[i][p] = true;
            let (pa, ia) = if p < i {
                let (lo, hi) = anc.split_at_mut(i);
                (&lo[p], &mut hi[0])
            } else {
                let (lo, hi) = anc.split_at_mut(p);
                (&hi[0], &mut lo[i])
            };
            for (dst, &src) in ia.iter_mut().zip(pa.iter()) {
                *dst |= src;
            }
        }
    }
    anc
}
