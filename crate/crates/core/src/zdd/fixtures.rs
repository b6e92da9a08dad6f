//! Small reference networks.

use alloc::vec::Vec;

use super::graph::{Designation, Graph};

/// Braess network: vertices s=0, a=1, b=2, t=3 and edges
/// 1:s–a, 2:s–b, 3:a–b, 4:a–t, 5:b–t (stored 0-based).
pub fn braess() -> Graph {
    Graph::from_pairs(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
        .and_then(|g| g.with_designation(Designation::OdPair { source: 0, target: 3 }))
        .expect("valid fixture")
}

/// `rows × cols` grid, vertices numbered row-major, OD pair between opposite
/// corners. Horizontal edges of each row come before the vertical edges
/// leaving it.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                pairs.push((id(r, c), id(r, c + 1)));
            }
        }
        if r + 1 < rows {
            for c in 0..cols {
                pairs.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_pairs(rows * cols, &pairs)
        .and_then(|g| g.with_designation(Designation::OdPair { source: 0, target: rows * cols - 1 }))
        .expect("valid fixture")
}

/// Complete graph `K_k`.
pub fn complete(k: usize) -> Graph {
    let mut pairs = Vec::new();
    for u in 0..k {
        for v in u + 1..k {
            pairs.push((u, v));
        }
    }
    Graph::from_pairs(k, &pairs).expect("valid fixture")
}

/// Six vertices, nine edges (a 2×3 grid plus two diagonals), terminals
/// {0, 2, 4}.
pub fn steiner6() -> Graph {
    let pairs = [(0, 1), (1, 2), (0, 3), (1, 4), (2, 5), (3, 4), (4, 5), (0, 4), (2, 4)];
    Graph::from_pairs(6, &pairs)
        .and_then(|g| g.with_designation(Designation::Terminals([0, 2, 4].to_vec())))
        .expect("valid fixture")
}

/// Two parallel routes of one edge each between vertices 0 and 1.
pub fn parallel_pair() -> Graph {
    Graph::from_pairs(2, &[(0, 1), (0, 1)])
        .and_then(|g| g.with_designation(Designation::OdPair { source: 0, target: 1 }))
        .expect("valid fixture")
}
