//! Directed acyclic graphs of subtasks.
//!
//! Vertices are dense indices `0..n`; an edge `(a, b)` means `b` may not
//! start before `a` has completed.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default limit on the number of paths [`Dag::enumerate_paths`] will return.
pub const DEFAULT_PATH_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("edge ({src}, {dst}) references a vertex outside 0..{vertex_count}")]
    DanglingEdge {
        src: usize,
        dst: usize,
        vertex_count: usize,
    },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph contains a cycle through vertex {0}")]
    Cycle(usize),
    #[error("graph has no vertices")]
    Empty,
    #[error("expected {expected} execution times, got {got}")]
    ExecLength { expected: usize, got: usize },
    #[error("execution time {exec} of vertex {vertex} exceeds its WCET {wcet}")]
    ExecExceedsWcet { vertex: usize, exec: u64, wcet: u64 },
    #[error("graph has {0} source vertices; a single source is required")]
    NotSingleSource(usize),
    #[error("more than {cap} paths reach vertex {vertex}; use the edge-recursive formulation instead")]
    PathExplosion { vertex: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subtask {
    pub id: usize,
    pub wcet: u64,
}

/// A validated DAG with cached adjacency and a deterministic topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    vertices: Vec<Subtask>,
    edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

/// Check the structural rules of a DAG and report the first violation.
///
/// Edges are checked in order for dangling endpoints, self-loops and
/// duplicates before acyclicity is tested.
pub fn validate(vertex_count: usize, edges: &[(usize, usize)]) -> Result<(), DagError> {
    topological_order(vertex_count, edges).map(|_| ())
}

fn topological_order(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, DagError> {
    if vertex_count == 0 {
        return Err(DagError::Empty);
    }
    let mut seen = BTreeSet::new();
    for &(src, dst) in edges {
        if src >= vertex_count || dst >= vertex_count {
            return Err(DagError::DanglingEdge { src, dst, vertex_count });
        }
        if src == dst {
            return Err(DagError::SelfLoop(src));
        }
        if !seen.insert((src, dst)) {
            return Err(DagError::DuplicateEdge(src, dst));
        }
    }

    let mut indegree = vec![0usize; vertex_count];
    let mut succs = vec![Vec::new(); vertex_count];
    for &(src, dst) in edges {
        indegree[dst] += 1;
        succs[src].push(dst);
    }
    // Kahn's algorithm, always taking the lowest ready id.
    let mut ready: BinaryHeap<Reverse<usize>> = (0..vertex_count).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(vertex_count);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &s in &succs[v] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    if order.len() < vertex_count {
        let stuck = (0..vertex_count).find(|&v| indegree[v] > 0).unwrap_or(0);
        return Err(DagError::Cycle(stuck));
    }
    Ok(order)
}

/// Result of [`Dag::normalize_source_sink`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedDag {
    pub dag: Dag,
    pub source: usize,
    pub sink: usize,
    pub added_source: bool,
    pub added_sink: bool,
}

impl Dag {
    pub fn new(wcets: &[u64], edges: &[(usize, usize)]) -> Result<Self, DagError> {
        let topo = topological_order(wcets.len(), edges)?;
        let n = wcets.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(src, dst) in edges {
            preds[dst].push(src);
            succs[src].push(dst);
        }
        for list in preds.iter_mut().chain(succs.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Dag {
            vertices: wcets
                .iter()
                .enumerate()
                .map(|(id, &wcet)| Subtask { id, wcet })
                .collect(),
            edges: edges.to_vec(),
            preds,
            succs,
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Subtask] {
        &self.vertices
    }

    pub fn wcet(&self, v: usize) -> u64 {
        self.vertices[v].wcet
    }

    pub fn wcets(&self) -> Vec<u64> {
        self.vertices.iter().map(|s| s.wcet).collect()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn preds(&self, v: usize) -> &[usize] {
        &self.preds[v]
    }

    pub fn succs(&self, v: usize) -> &[usize] {
        &self.succs[v]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn sources(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.preds[v].is_empty()).collect()
    }

    pub fn sinks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.succs[v].is_empty()).collect()
    }

    /// Sum of all WCETs (the task's work).
    pub fn work(&self) -> u64 {
        self.vertices.iter().map(|s| s.wcet).sum()
    }

    /// Length of a longest path, counting every vertex's WCET.
    pub fn span(&self) -> u64 {
        let start = self.longest_distances(|v| self.wcet(v));
        (0..self.len()).map(|v| start[v] + self.wcet(v)).max().unwrap_or(0)
    }

    fn longest_distances(&self, exec: impl Fn(usize) -> u64) -> Vec<u64> {
        let mut start = vec![0u64; self.len()];
        for &v in &self.topo {
            let finish = start[v] + exec(v);
            for &s in &self.succs[v] {
                start[s] = start[s].max(finish);
            }
        }
        start
    }

    /// Start times in the unrestricted-processor schedule where every
    /// subtask starts the instant its last predecessor finishes.
    ///
    /// Equivalently, the longest distance from any source to each vertex,
    /// excluding the vertex itself.
    pub fn asap_start_times(&self, exec: &[u64]) -> Result<Vec<u64>, DagError> {
        if exec.len() != self.len() {
            return Err(DagError::ExecLength {
                expected: self.len(),
                got: exec.len(),
            });
        }
        if let Some(v) = (0..self.len()).find(|&v| exec[v] > self.wcet(v)) {
            return Err(DagError::ExecExceedsWcet {
                vertex: v,
                exec: exec[v],
                wcet: self.wcet(v),
            });
        }
        Ok(self.longest_distances(|v| exec[v]))
    }

    /// Start times with every subtask running for its full WCET.
    pub fn wcet_start_times(&self) -> Vec<u64> {
        self.longest_distances(|v| self.wcet(v))
    }

    /// Add zero-WCET dummy vertices so the graph has exactly one source and
    /// one sink. Dummies are appended after the original vertices.
    pub fn normalize_source_sink(&self) -> NormalizedDag {
        let sources = self.sources();
        let sinks = self.sinks();
        let mut wcets = self.wcets();
        let mut edges = self.edges.clone();

        let (source, added_source) = if sources.len() == 1 {
            (sources[0], false)
        } else {
            let s = wcets.len();
            wcets.push(0);
            edges.extend(sources.iter().map(|&v| (s, v)));
            (s, true)
        };
        let (sink, added_sink) = if sinks.len() == 1 {
            (sinks[0], false)
        } else {
            let t = wcets.len();
            wcets.push(0);
            edges.extend(sinks.iter().map(|&v| (v, t)));
            (t, true)
        };
        let dag = if added_source || added_sink {
            Dag::new(&wcets, &edges).expect("adding a source and sink keeps the graph acyclic")
        } else {
            self.clone()
        };
        NormalizedDag {
            dag,
            source,
            sink,
            added_source,
            added_sink,
        }
    }

    /// Number of source-to-`v` paths, saturating at `usize::MAX`.
    pub fn count_paths_to(&self, v: usize) -> usize {
        let mut count = vec![0usize; self.len()];
        for &u in &self.topo {
            if self.preds[u].is_empty() {
                count[u] = 1;
            }
            if u == v {
                break;
            }
            let c = count[u];
            for &s in &self.succs[u] {
                count[s] = count[s].saturating_add(c);
            }
        }
        count[v]
    }

    /// All paths from the unique source to `v`, each listed source first.
    ///
    /// Refuses with [`DagError::PathExplosion`] when more than `cap` paths
    /// exist.
    pub fn enumerate_paths(&self, v: usize, cap: usize) -> Result<Vec<Vec<usize>>, DagError> {
        let sources = self.sources();
        if sources.len() != 1 {
            return Err(DagError::NotSingleSource(sources.len()));
        }
        if self.count_paths_to(v) > cap {
            return Err(DagError::PathExplosion { vertex: v, cap });
        }
        let mut paths = Vec::new();
        let mut suffix = vec![v];
        self.collect_paths(v, &mut suffix, &mut paths);
        Ok(paths)
    }

    fn collect_paths(&self, v: usize, suffix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if self.preds[v].is_empty() {
            out.push(suffix.iter().rev().copied().collect());
            return;
        }
        for &p in &self.preds[v] {
            suffix.push(p);
            self.collect_paths(p, suffix, out);
            suffix.pop();
        }
    }

    pub fn is_weakly_connected(&self) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in self.preds[v].iter().chain(&self.succs[v]) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
