//! Frontier-based construction of path, cycle and Steiner-tree families.
//!
//! Edges are processed in variable order. A state records, for every
//! frontier vertex, its degree in the partial subgraph and a canonical
//! component label. States that agree on the frontier are merged, then the
//! level-by-level diagram is reduced bottom-up.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::graph::{Graph, StrategyClass};
use super::order::Frontiers;
use super::{Zdd, ZddError, ZddNode, BOTTOM, TOP};

const NO_COMP: u8 = u8::MAX;
const MAX_FRONTIER: usize = 250;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Paths,
    Cycles,
    Trees,
}

#[derive(Clone, Copy)]
enum Child {
    Terminal(bool),
    State(usize),
}

struct Limits {
    rule: Rule,
    required: Vec<bool>,
    cap: Vec<u8>,
    /// Position of the last edge touching any required vertex.
    required_done_at: usize,
}

pub(crate) fn build(graph: &Graph, class: &StrategyClass, order: &[usize]) -> Result<Zdd, ZddError> {
    class.validate(graph)?;
    let n = graph.edge_count();
    let nv = graph.vertex_count();
    let (rule, required_list): (Rule, Vec<usize>) = match class {
        StrategyClass::SimplePaths { source, target } => (Rule::Paths, vec![*source, *target]),
        StrategyClass::HamiltonianCycles => (Rule::Cycles, (0..nv).collect()),
        StrategyClass::SteinerTrees { terminals } => {
            let mut ts = terminals.clone();
            ts.sort_unstable();
            ts.dedup();
            (Rule::Trees, ts)
        }
    };

    let fr = Frontiers::new(graph, order);
    if let Some(width) = fr.sets.iter().map(Vec::len).max() {
        if width > MAX_FRONTIER {
            return Err(ZddError::Config("frontier too wide", width));
        }
    }

    // Required vertices without incident edges.
    let isolated = required_list.iter().any(|&w| fr.first[w] == usize::MAX);
    if isolated || n == 0 {
        let root = if rule == Rule::Trees && required_list.len() == 1 { TOP } else { BOTTOM };
        return Ok(Zdd::terminal(n, order.to_vec(), root));
    }
    if rule == Rule::Cycles && nv < 3 {
        return Ok(Zdd::terminal(n, order.to_vec(), BOTTOM));
    }

    let mut required = vec![false; nv];
    for &w in &required_list {
        required[w] = true;
    }
    let cap = (0..nv)
        .map(|w| match rule {
            Rule::Paths if required[w] => 1,
            Rule::Paths | Rule::Cycles => 2,
            Rule::Trees => u8::MAX,
        })
        .collect();
    let limits = Limits {
        rule,
        required,
        cap,
        required_done_at: required_list.iter().map(|&w| fr.last[w]).max().unwrap_or(0),
    };

    // levels[k]: states at position k, each with its (lo, hi) children.
    let mut level_states: Vec<Vec<Vec<u8>>> = vec![vec![Vec::new()]];
    let mut level_children: Vec<Vec<(Child, Child)>> = Vec::with_capacity(n);
    let mut scratch = Scratch::new(nv);

    for pos in 0..n {
        let mut next_index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut next_states: Vec<Vec<u8>> = Vec::new();
        let mut children = Vec::with_capacity(level_states[pos].len());
        for state in &level_states[pos] {
            let mut pair = [Child::Terminal(false); 2];
            for (take, slot) in [false, true].into_iter().zip(pair.iter_mut()) {
                *slot = match step(&limits, graph, order, &fr, pos, state, take, &mut scratch) {
                    Outcome::Terminal(t) => Child::Terminal(t),
                    Outcome::Next(key) => {
                        if pos + 1 == n {
                            // Nothing left to close: only the empty selection
                            // survives this far, and it was accepted earlier
                            // if it is valid.
                            Child::Terminal(false)
                        } else {
                            let len = next_states.len();
                            let idx = *next_index.entry(key.clone()).or_insert(len);
                            if idx == len {
                                next_states.push(key);
                            }
                            Child::State(idx)
                        }
                    }
                };
            }
            children.push((pair[0], pair[1]));
        }
        level_children.push(children);
        level_states.push(next_states);
    }

    Ok(reduce_levels(n, order, &level_children))
}

enum Outcome {
    Terminal(bool),
    Next(Vec<u8>),
}

struct Scratch {
    deg: Vec<u8>,
    comp: Vec<u32>,
    relabel: Vec<u8>,
}

impl Scratch {
    fn new(nv: usize) -> Self {
        Self { deg: vec![0; nv], comp: vec![u32::MAX; nv], relabel: Vec::new() }
    }
}

#[allow(clippy::too_many_arguments)]
fn step(
    limits: &Limits,
    graph: &Graph,
    order: &[usize],
    fr: &Frontiers,
    pos: usize,
    state: &[u8],
    take: bool,
    s: &mut Scratch,
) -> Outcome {
    let edge = &graph.edges()[order[pos]];
    let current = &fr.sets[pos];

    // Decode the frontier state into per-vertex scratch.
    for (i, &w) in current.iter().enumerate() {
        s.deg[w] = state[2 * i];
        s.comp[w] = match state[2 * i + 1] {
            NO_COMP => u32::MAX,
            c => c as u32,
        };
    }
    for w in [edge.u, edge.v] {
        if fr.first[w] == pos {
            s.deg[w] = 0;
            s.comp[w] = u32::MAX;
        }
    }
    let mut working: Vec<usize> = current.clone();
    for w in [edge.u, edge.v] {
        if !working.contains(&w) {
            working.push(w);
        }
    }

    if take {
        let (u, v) = (edge.u, edge.v);
        if s.deg[u] >= limits.cap[u] || s.deg[v] >= limits.cap[v] {
            return Outcome::Terminal(false);
        }
        let (cu, cv) = (s.comp[u], s.comp[v]);
        if cu != u32::MAX && cu == cv && limits.rule != Rule::Cycles {
            return Outcome::Terminal(false);
        }
        // Fresh labels sit above every canonical label (< 256).
        let label_u = if cu == u32::MAX { 256 + u as u32 } else { cu };
        let label_v = if cv == u32::MAX { 256 + v as u32 } else { cv };
        for &w in &working {
            if s.comp[w] == label_v && label_v != u32::MAX {
                s.comp[w] = label_u;
            }
        }
        s.comp[u] = label_u;
        s.comp[v] = label_u;
        s.deg[u] = s.deg[u].saturating_add(1);
        s.deg[v] = s.deg[v].saturating_add(1);
    }

    // Vertices whose last edge is this one leave the frontier.
    let mut closed: Option<u32> = None;
    let mut leaving_empty_terminal = false;
    for &w in &working {
        if fr.last[w] != pos {
            continue;
        }
        let d = s.deg[w];
        let ok = match limits.rule {
            Rule::Paths if limits.required[w] => d == 1,
            Rule::Paths => d == 0 || d == 2,
            Rule::Cycles => d == 2,
            Rule::Trees => {
                if limits.required[w] && d == 0 {
                    leaving_empty_terminal = true;
                }
                true
            }
        };
        if !ok {
            return Outcome::Terminal(false);
        }
        if d > 0 {
            let c = s.comp[w];
            let still_open = working.iter().any(|&x| fr.last[x] != pos && s.deg[x] > 0 && s.comp[x] == c);
            if !still_open {
                match closed {
                    Some(other) if other != c => return Outcome::Terminal(false),
                    _ => closed = Some(c),
                }
            }
        }
    }

    let remaining: Vec<usize> = fr.sets[pos + 1].clone();
    let any_active = remaining.iter().any(|&x| s.deg[x] > 0);

    if leaving_empty_terminal {
        // A terminal left uncovered: only the empty tree on a single
        // terminal can still be valid.
        let single = limits.required.iter().filter(|&&r| r).count() == 1;
        let nothing_chosen = closed.is_none() && !any_active && working.iter().all(|&x| s.deg[x] == 0);
        return Outcome::Terminal(single && nothing_chosen);
    }

    if closed.is_some() {
        return Outcome::Terminal(!any_active && limits.required_done_at <= pos);
    }

    // Canonical encoding of the next frontier.
    s.relabel.clear();
    let mut key = Vec::with_capacity(2 * remaining.len());
    let mut comp_ids: Vec<u32> = Vec::new();
    for &w in &remaining {
        let d = if limits.rule == Rule::Trees { s.deg[w].min(1) } else { s.deg[w] };
        key.push(d);
        if s.deg[w] == 0 {
            key.push(NO_COMP);
        } else {
            let c = s.comp[w];
            let id = match comp_ids.iter().position(|&x| x == c) {
                Some(i) => i,
                None => {
                    comp_ids.push(c);
                    comp_ids.len() - 1
                }
            };
            key.push(id as u8);
        }
    }
    Outcome::Next(key)
}

/// Bottom-up reduction of the level diagram into a canonical arena.
fn reduce_levels(n: usize, order: &[usize], levels: &[Vec<(Child, Child)>]) -> Zdd {
    let mut nodes: Vec<ZddNode> = vec![ZddNode::TERMINAL, ZddNode::TERMINAL];
    let mut unique: HashMap<(u32, u32, u32), u32> = HashMap::new();
    let mut below: Vec<u32> = Vec::new();
    for pos in (0..levels.len()).rev() {
        let label = order[pos] as u32;
        let resolve = |c: Child, below: &[u32]| match c {
            Child::Terminal(true) => TOP,
            Child::Terminal(false) => BOTTOM,
            Child::State(i) => below[i],
        };
        let mut here = Vec::with_capacity(levels[pos].len());
        for &(lo, hi) in &levels[pos] {
            let lo = resolve(lo, &below);
            let hi = resolve(hi, &below);
            let id = if hi == BOTTOM {
                lo
            } else {
                *unique.entry((label, lo, hi)).or_insert_with(|| {
                    nodes.push(ZddNode { label, lo, hi });
                    (nodes.len() - 1) as u32
                })
            };
            here.push(id);
        }
        below = here;
    }
    let root = below.first().copied().unwrap_or(BOTTOM);
    Zdd::compact(n, order.to_vec(), &nodes, root)
}
