use alloc::vec::Vec;

use super::ZddError;

/// Undirected edge. Its position in [`Graph::edges`] is the ground-set
/// element (variable) it stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Designation {
    OdPair { source: usize, target: usize },
    Terminals(Vec<usize>),
    None,
}

/// Network whose edges form the ground set `[n]`.
///
/// Lengths are normalized on construction so the longest edge has length 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<Edge>,
    designation: Designation,
}

impl Graph {
    pub fn new(
        vertex_count: usize,
        mut edges: Vec<Edge>,
        designation: Designation,
    ) -> Result<Self, ZddError> {
        for (i, e) in edges.iter().enumerate() {
            if e.u >= vertex_count || e.v >= vertex_count {
                return Err(ZddError::Config("edge endpoint out of range", i));
            }
            if e.u == e.v {
                return Err(ZddError::Config("self-loop", i));
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(ZddError::Config("edge length must be positive", i));
            }
        }
        let longest = edges.iter().map(|e| e.length).fold(0.0, f64::max);
        if longest > 0.0 {
            for e in &mut edges {
                e.length /= longest;
            }
        }
        match &designation {
            Designation::OdPair { source, target } => {
                if *source >= vertex_count || *target >= vertex_count {
                    return Err(ZddError::Config("od vertex out of range", 0));
                }
            }
            Designation::Terminals(ts) => {
                if let Some(&t) = ts.iter().find(|&&t| t >= vertex_count) {
                    return Err(ZddError::Config("terminal out of range", t));
                }
            }
            Designation::None => {}
        }
        Ok(Self { vertex_count, edges, designation })
    }

    /// Graph with unit lengths and no designation.
    pub fn from_pairs(vertex_count: usize, pairs: &[(usize, usize)]) -> Result<Self, ZddError> {
        let edges = pairs.iter().map(|&(u, v)| Edge { u, v, length: 1.0 }).collect();
        Self::new(vertex_count, edges, Designation::None)
    }

    pub fn with_designation(mut self, designation: Designation) -> Result<Self, ZddError> {
        self.designation = designation;
        Self::new(self.vertex_count, self.edges, self.designation)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn designation(&self) -> &Designation {
        &self.designation
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    /// Adjacency as `(neighbor, edge index)` lists.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = alloc::vec![Vec::new(); self.vertex_count];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        adj
    }
}

/// The combinatorial strategies a follower may choose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrategyClass {
    SimplePaths { source: usize, target: usize },
    HamiltonianCycles,
    SteinerTrees { terminals: Vec<usize> },
}

/// Class names as used on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassKind {
    Paths,
    Hamilton,
    Steiner,
}

impl StrategyClass {
    /// Resolves a class kind against the graph's designation.
    pub fn from_designation(kind: ClassKind, graph: &Graph) -> Result<Self, ZddError> {
        match (kind, graph.designation()) {
            (ClassKind::Paths, Designation::OdPair { source, target }) => {
                Ok(StrategyClass::SimplePaths { source: *source, target: *target })
            }
            (ClassKind::Steiner, Designation::Terminals(ts)) => {
                Ok(StrategyClass::SteinerTrees { terminals: ts.clone() })
            }
            (ClassKind::Hamilton, _) => Ok(StrategyClass::HamiltonianCycles),
            (ClassKind::Paths, _) => Err(ZddError::Config("paths require an od designation", 0)),
            (ClassKind::Steiner, _) => {
                Err(ZddError::Config("steiner trees require a terminals designation", 0))
            }
        }
    }

    pub fn validate(&self, graph: &Graph) -> Result<(), ZddError> {
        let n = graph.vertex_count();
        match self {
            StrategyClass::SimplePaths { source, target } => {
                if source == target {
                    return Err(ZddError::Config("path endpoints must differ", *source));
                }
                if *source >= n || *target >= n {
                    return Err(ZddError::Config("path endpoint out of range", 0));
                }
            }
            StrategyClass::HamiltonianCycles => {}
            StrategyClass::SteinerTrees { terminals } => {
                if terminals.is_empty() {
                    return Err(ZddError::Config("steiner trees need at least one terminal", 0));
                }
                if let Some(&t) = terminals.iter().find(|&&t| t >= n) {
                    return Err(ZddError::Config("terminal out of range", t));
                }
            }
        }
        Ok(())
    }

    /// Membership predicate over explicit edge subsets; used as the
    /// brute-force reference for the frontier construction.
    pub fn contains(&self, graph: &Graph, subset: &[usize]) -> bool {
        let n = graph.vertex_count();
        let mut degree = alloc::vec![0usize; n];
        let mut dsu = Dsu::new(n);
        let mut acyclic = true;
        for &i in subset {
            let e = &graph.edges()[i];
            degree[e.u] += 1;
            degree[e.v] += 1;
            if !dsu.union(e.u, e.v) {
                acyclic = false;
            }
        }
        let touched: Vec<usize> = (0..n).filter(|&v| degree[v] > 0).collect();
        let connected = touched.windows(2).all(|w| dsu.find(w[0]) == dsu.find(w[1]));
        match self {
            StrategyClass::SimplePaths { source, target } => {
                acyclic
                    && connected
                    && degree[*source] == 1
                    && degree[*target] == 1
                    && (0..n).filter(|v| v != source && v != target).all(|v| degree[v] == 0 || degree[v] == 2)
            }
            StrategyClass::HamiltonianCycles => {
                n >= 3 && !subset.is_empty() && connected && degree.iter().all(|&d| d == 2)
            }
            StrategyClass::SteinerTrees { terminals } => {
                if subset.is_empty() {
                    return terminals.iter().all(|&t| t == terminals[0]);
                }
                acyclic && connected && terminals.iter().all(|&t| degree[t] > 0)
            }
        }
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[rb] = ra;
        true
    }
}
