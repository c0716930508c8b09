//! Small directed-graph helpers shared by the analyses.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

/// Strongly connected components of the graph on `0..n`.
/// Components are sorted by their smallest member, members ascending.
pub fn sccs(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    for _ in 0..n {
        g.add_node(());
    }
    for (a, b) in edges {
        g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|i| i.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort();
    comps
}

/// Maps each node to the index of its component.
pub fn component_index(n: usize, comps: &[Vec<usize>]) -> Vec<usize> {
    let mut idx = vec![usize::MAX; n];
    for (c, members) in comps.iter().enumerate() {
        for &m in members {
            idx[m] = c;
        }
    }
    idx
}

/// Breadth-first shortest path from `from` to `to` using `succ`, restricted to `allowed`.
/// Returns the node sequence including both endpoints.
pub fn bfs_path(
    from: usize,
    to: usize,
    n: usize,
    succ: impl Fn(usize) -> Vec<usize>,
    allowed: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for v in succ(u) {
            if !seen[v] && allowed(v) {
                seen[v] = true;
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}
