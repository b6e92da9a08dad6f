//! Zero-suppressed binary decision diagrams over an edge-indexed ground set.
//!
//! Nodes live in an arena. Indices 0 and 1 are the ⊥ and ⊤ terminals; every
//! other node's children have smaller indices than the node itself, and the
//! root is the last node. Variables are edge indices (0-based); the
//! variable order decides which label may appear below which.

mod frontier;
mod graph;
mod order;

pub mod fixtures;

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

pub use graph::{ClassKind, Designation, Edge, Graph, StrategyClass};
pub use order::{choose_variable_order, max_frontier_size};

pub const BOTTOM: u32 = 0;
pub const TOP: u32 = 1;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ZddError {
    #[error("configuration error: {0} ({1})")]
    Config(&'static str, usize),
    #[error("family has {count} members, more than the limit {limit}")]
    Overflow { count: BigUint, limit: usize },
    #[error("the family is empty")]
    EmptyFamily,
    #[error("cost vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("structural invariant violated at node {node}: {what}")]
    Structure { node: usize, what: &'static str },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ZddNode {
    pub label: u32,
    pub lo: u32,
    pub hi: u32,
}

impl ZddNode {
    pub(crate) const TERMINAL: ZddNode = ZddNode { label: u32::MAX, lo: u32::MAX, hi: u32::MAX };
}

/// Immutable reduced ZDD. Safe to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Zdd {
    num_vars: usize,
    order: Vec<usize>,
    position: Vec<usize>,
    nodes: Vec<ZddNode>,
    root: u32,
}

impl Zdd {
    /// Compiles the family of `class` strategies on `graph` using the
    /// default BFS variable order.
    pub fn build(graph: &Graph, class: &StrategyClass) -> Result<Self, ZddError> {
        let order = choose_variable_order(graph);
        Self::build_with_order(graph, class, &order)
    }

    pub fn build_with_order(graph: &Graph, class: &StrategyClass, order: &[usize]) -> Result<Self, ZddError> {
        check_permutation(order, graph.edge_count())?;
        frontier::build(graph, class, order)
    }

    /// Assembles a diagram from explicit parts and checks every structural
    /// invariant.
    pub fn from_parts(
        num_vars: usize,
        order: Vec<usize>,
        nonterminals: Vec<ZddNode>,
        root: u32,
    ) -> Result<Self, ZddError> {
        check_permutation(&order, num_vars)?;
        let mut nodes = vec![ZddNode::TERMINAL, ZddNode::TERMINAL];
        nodes.extend(nonterminals);
        let zdd = Self { num_vars, position: positions(&order), order, nodes, root };
        zdd.validate()?;
        Ok(zdd)
    }

    /// The family `{∅}` if `root` is ⊤, the empty family if ⊥.
    pub(crate) fn terminal(num_vars: usize, order: Vec<usize>, root: u32) -> Self {
        Self {
            num_vars,
            position: positions(&order),
            order,
            nodes: vec![ZddNode::TERMINAL, ZddNode::TERMINAL],
            root,
        }
    }

    /// Renumbers the nodes reachable from `root` in post-order (lo first),
    /// so children precede parents and the root comes last.
    pub(crate) fn compact(num_vars: usize, order: Vec<usize>, nodes: &[ZddNode], root: u32) -> Self {
        let mut new_id = vec![u32::MAX; nodes.len()];
        new_id[0] = BOTTOM;
        new_id[1] = TOP;
        let mut out = vec![ZddNode::TERMINAL, ZddNode::TERMINAL];
        let mut stack: Vec<(u32, bool)> = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if new_id[v as usize] != u32::MAX {
                continue;
            }
            let node = nodes[v as usize];
            if expanded {
                new_id[v as usize] = out.len() as u32;
                out.push(ZddNode {
                    label: node.label,
                    lo: new_id[node.lo as usize],
                    hi: new_id[node.hi as usize],
                });
            } else {
                stack.push((v, true));
                stack.push((node.hi, false));
                stack.push((node.lo, false));
            }
        }
        Self { num_vars, position: positions(&order), order, nodes: out, root: new_id[root as usize] }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of variable `var` in the order.
    pub fn position(&self, var: usize) -> usize {
        self.position[var]
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    /// All nodes including the two terminals at indices 0 and 1.
    pub fn nodes(&self) -> &[ZddNode] {
        &self.nodes
    }

    /// Non-terminal nodes, children before parents.
    pub fn nonterminals(&self) -> &[ZddNode] {
        &self.nodes[2..]
    }

    /// `|Z|`: node count including both terminals.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        2 * self.nonterminals().len()
    }

    pub fn is_empty_family(&self) -> bool {
        self.root == BOTTOM
    }

    /// Number of member sets (root-to-⊤ paths).
    pub fn count(&self) -> BigUint {
        let mut paths: Vec<BigUint> = Vec::with_capacity(self.nodes.len());
        paths.push(BigUint::zero());
        paths.push(BigUint::from(1u8));
        for node in self.nonterminals() {
            let c = &paths[node.lo as usize] + &paths[node.hi as usize];
            paths.push(c);
        }
        paths[self.root as usize].clone()
    }

    /// Explicit list of all member sets.
    ///
    /// Each set is sorted by edge index; the list is lexicographic with
    /// respect to the variable order.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<Vec<usize>>, ZddError> {
        let count = self.count();
        if count.to_usize().is_none_or(|c| c > limit) {
            return Err(ZddError::Overflow { count, limit });
        }
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.collect(self.root, &mut prefix, &mut out);
        out.sort_by(|a, b| self.lex_cmp(a, b));
        for set in &mut out {
            set.sort_unstable();
        }
        Ok(out)
    }

    fn collect(&self, v: u32, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match v {
            BOTTOM => {}
            TOP => out.push(prefix.clone()),
            _ => {
                let node = self.nodes[v as usize];
                self.collect(node.lo, prefix, out);
                prefix.push(node.label as usize);
                self.collect(node.hi, prefix, out);
                prefix.pop();
            }
        }
    }

    /// Lexicographic comparison of two sets listed in variable order.
    fn lex_cmp(&self, a: &[usize], b: &[usize]) -> Ordering {
        let pa = a.iter().map(|&x| self.position[x]);
        let pb = b.iter().map(|&x| self.position[x]);
        pa.cmp(pb)
    }

    /// Minimum of `Σ_{i∈S} cost_i` over the family, with the
    /// lexicographically smallest minimizer (in variable order).
    pub fn linear_min(&self, cost: &[f64]) -> Result<(f64, Vec<usize>), ZddError> {
        if cost.len() != self.num_vars {
            return Err(ZddError::Dimension { expected: self.num_vars, got: cost.len() });
        }
        if self.is_empty_family() {
            return Err(ZddError::EmptyFamily);
        }
        let mut best = vec![f64::INFINITY; self.nodes.len()];
        best[TOP as usize] = 0.0;
        for (i, node) in self.nodes.iter().enumerate().skip(2) {
            let lo = best[node.lo as usize];
            let hi = cost[node.label as usize] + best[node.hi as usize];
            best[i] = lo.min(hi);
        }
        let mut set = Vec::new();
        let mut v = self.root;
        while v != TOP {
            let node = self.nodes[v as usize];
            let here = best[v as usize];
            let lo_ok = best[node.lo as usize] == here;
            let hi_ok = cost[node.label as usize] + best[node.hi as usize] == here;
            // The empty remainder beats any set with more elements; otherwise
            // including the current (earliest) label wins.
            let take_hi = hi_ok && !(lo_ok && node.lo == TOP);
            if take_hi {
                set.push(node.label as usize);
                v = node.hi;
            } else {
                v = node.lo;
            }
        }
        set.sort_unstable();
        Ok((best[self.root as usize], set))
    }

    /// Checks order, zero-suppression, reduction, topological numbering and
    /// reachability in one pass.
    pub fn validate(&self) -> Result<(), ZddError> {
        let len = self.nodes.len();
        if (self.root as usize) >= len {
            return Err(ZddError::Structure { node: self.root as usize, what: "root out of range" });
        }
        if len > 2 && self.root as usize != len - 1 {
            return Err(ZddError::Structure { node: self.root as usize, what: "root is not the last node" });
        }
        if let Some(i) = (2..len).find(|&i| self.nodes[i].label as usize >= self.num_vars) {
            return Err(ZddError::Structure { node: i, what: "label out of range" });
        }
        let mut seen: HashMap<ZddNode, usize> = HashMap::new();
        let mut reachable = vec![false; len];
        reachable[self.root as usize] = true;
        for i in (2..len).rev() {
            let node = self.nodes[i];
            let bad = |what| Err(ZddError::Structure { node: i, what });
            if node.lo as usize >= i || node.hi as usize >= i {
                return bad("child does not precede parent");
            }
            if node.hi == BOTTOM {
                return bad("1-arc points to bottom");
            }
            let pos = self.position[node.label as usize];
            for child in [node.lo, node.hi] {
                if child > TOP && self.position[self.nodes[child as usize].label as usize] <= pos {
                    return bad("child label not later in the order");
                }
            }
            if seen.insert(node, i).is_some() {
                return bad("duplicate node");
            }
            if !reachable[i] {
                return bad("unreachable node");
            }
            reachable[node.lo as usize] = true;
            reachable[node.hi as usize] = true;
        }
        Ok(())
    }

    /// Re-applies the reduction rules and compacts.
    pub fn reduce(&self) -> Zdd {
        let mut remap: Vec<u32> = vec![BOTTOM, TOP];
        let mut nodes = vec![ZddNode::TERMINAL, ZddNode::TERMINAL];
        let mut unique: HashMap<(u32, u32, u32), u32> = HashMap::new();
        for node in self.nonterminals() {
            let lo = remap[node.lo as usize];
            let hi = remap[node.hi as usize];
            let id = if hi == BOTTOM {
                lo
            } else {
                *unique.entry((node.label, lo, hi)).or_insert_with(|| {
                    nodes.push(ZddNode { label: node.label, lo, hi });
                    (nodes.len() - 1) as u32
                })
            };
            remap.push(id);
        }
        Zdd::compact(self.num_vars, self.order.clone(), &nodes, remap[self.root as usize])
    }
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    pos
}

fn check_permutation(order: &[usize], n: usize) -> Result<(), ZddError> {
    if order.len() != n {
        return Err(ZddError::Config("variable order has wrong length", order.len()));
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return Err(ZddError::Config("variable order is not a permutation", v));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Every subset of `[n]` (as sorted index lists) accepted by `class`.
/// Exponential; intended as a reference for small graphs.
pub fn brute_force_family(graph: &Graph, class: &StrategyClass) -> Vec<Vec<usize>> {
    let n = graph.edge_count();
    assert!(n < 26, "brute force is limited to small graphs");
    (0u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|s| class.contains(graph, s))
        .collect()
}
