use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{Designation, Graph};

/// BFS edge order: edges sorted by the BFS layer of their nearer endpoint,
/// then the farther endpoint's layer, then edge index.
///
/// The BFS starts at the OD source, the first terminal, or vertex 0.
/// Unreachable vertices sort last.
pub fn choose_variable_order(graph: &Graph) -> Vec<usize> {
    let start = match graph.designation() {
        Designation::OdPair { source, .. } => *source,
        Designation::Terminals(ts) if !ts.is_empty() => ts[0],
        _ => 0,
    };
    let layer = bfs_layers(graph, start);
    let mut order: Vec<usize> = (0..graph.edge_count()).collect();
    order.sort_by_key(|&i| {
        let e = &graph.edges()[i];
        let (a, b) = (layer[e.u], layer[e.v]);
        (a.min(b), a.max(b), i)
    });
    order
}

fn bfs_layers(graph: &Graph, start: usize) -> Vec<usize> {
    let mut layer = vec![usize::MAX; graph.vertex_count()];
    if start >= graph.vertex_count() {
        return layer;
    }
    let adj = graph.adjacency();
    let mut queue = VecDeque::new();
    layer[start] = 0;
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        for &(w, _) in &adj[u] {
            if layer[w] == usize::MAX {
                layer[w] = layer[u] + 1;
                queue.push_back(w);
            }
        }
    }
    layer
}

/// Per-position frontier sets for an edge order.
///
/// `frontiers()[k]` holds, sorted, the vertices that have been touched by
/// edges before position `k` and are touched again at or after `k`.
pub(crate) struct Frontiers {
    pub first: Vec<usize>,
    pub last: Vec<usize>,
    pub sets: Vec<Vec<usize>>,
}

impl Frontiers {
    pub(crate) fn new(graph: &Graph, order: &[usize]) -> Self {
        let nv = graph.vertex_count();
        let mut first = vec![usize::MAX; nv];
        let mut last = vec![usize::MAX; nv];
        for (pos, &ei) in order.iter().enumerate() {
            let e = &graph.edges()[ei];
            for w in [e.u, e.v] {
                if first[w] == usize::MAX {
                    first[w] = pos;
                }
                last[w] = pos;
            }
        }
        let sets = (0..=order.len())
            .map(|k| (0..nv).filter(|&w| first[w] != usize::MAX && first[w] < k && last[w] >= k).collect())
            .collect();
        Self { first, last, sets }
    }
}

/// Largest frontier encountered while processing `order`.
pub fn max_frontier_size(graph: &Graph, order: &[usize]) -> usize {
    Frontiers::new(graph, order).sets.iter().map(Vec::len).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zdd::fixtures;

    #[test]
    fn braess_order_is_identity() {
        assert_eq!(choose_variable_order(&fixtures::braess()), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn path_graph_order() {
        let g = Graph::from_pairs(3, &[(0, 1), (1, 2)])
            .unwrap()
            .with_designation(Designation::OdPair { source: 0, target: 2 })
            .unwrap();
        assert_eq!(choose_variable_order(&g), vec![0, 1]);
    }

    #[test]
    fn grid_frontier_is_small() {
        let g = fixtures::grid(3, 3);
        let order = choose_variable_order(&g);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..12).collect::<Vec<_>>());
        assert!(max_frontier_size(&g, &order) <= 4);
    }

    #[test]
    fn order_is_deterministic() {
        let g = fixtures::grid(3, 4);
        assert_eq!(choose_variable_order(&g), choose_variable_order(&g));
    }
}
