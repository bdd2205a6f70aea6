//! Undirected multigraphs with a source vertex, cuts, and protected sets.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    #[serde(with = "rational::serde_q")]
    pub cost: Q,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// Vertices are `0..n`; edge ids are positions in `edges()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    source: VertexId,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<Edge>, source: VertexId) -> Result<Self> {
        if source >= n {
            return Err(Error::Input(format!("source {source} is not a vertex of a graph with {n} vertices")));
        }
        let mut adj = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::Input(format!("edge {id} ({}, {}) has an undeclared endpoint", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::Input(format!("edge {id} is a self-loop at {}", e.u)));
            }
            if e.cost.is_negative() {
                return Err(Error::Input(format!("edge {id} has negative cost {}", rational::format(&e.cost))));
            }
            adj[e.u].push((e.v, id));
            adj[e.v].push((e.u, id));
        }
        Ok(WeightedGraph { n, edges, source, adj })
    }

    /// Convenience constructor from `(u, v, cost)` triples.
    pub fn from_triples(n: usize, source: VertexId, triples: &[(VertexId, VertexId, Q)]) -> Result<Self> {
        let edges = triples.iter().map(|(u, v, c)| Edge { u: *u, v: *v, cost: c.clone() }).collect();
        Self::new(n, edges, source)
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    pub fn total_cost(&self) -> Q {
        rational::sum(self.edges.iter().map(|e| &e.cost))
    }

    /// Smallest strictly positive edge cost, if any.
    pub fn min_positive_cost(&self) -> Option<Q> {
        self.edges.iter().map(|e| &e.cost).filter(|c| c.is_positive()).min().cloned()
    }

    pub fn non_source_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n).filter(move |&v| v != self.source)
    }

    pub fn cost_of<'a>(&self, edges: impl IntoIterator<Item = &'a EdgeId>) -> Q {
        rational::sum(edges.into_iter().map(|&e| &self.edges[e].cost))
    }

    pub fn check_edges<'a>(&self, edges: impl IntoIterator<Item = &'a EdgeId>) -> Result<()> {
        for &e in edges {
            if e >= self.edges.len() {
                return Err(Error::Input(format!("unknown edge id {e}")));
            }
        }
        Ok(())
    }

    /// Reachability from the source with the edges flagged in `removed` deleted.
    pub fn reachable_mask(&self, removed: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([self.source]);
        seen[self.source] = true;
        while let Some(x) = queue.pop_front() {
            for &(y, e) in &self.adj[x] {
                if !removed[e] && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_mask(&vec![false; self.edges.len()]).iter().all(|&r| r)
    }

    /// Connected with exactly `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.n && self.is_connected()
    }

    /// Vertices disconnected from the source once `cut` is removed.
    pub fn protected_set(&self, cut: &BTreeSet<EdgeId>) -> Result<BTreeSet<VertexId>> {
        self.check_edges(cut)?;
        let mut removed = vec![false; self.edges.len()];
        for &e in cut {
            removed[e] = true;
        }
        let reach = self.reachable_mask(&removed);
        Ok((0..self.n).filter(|&v| !reach[v]).collect())
    }

    /// δ(S): edges with exactly one endpoint in `set`.
    pub fn boundary(&self, set: &BTreeSet<VertexId>) -> Result<BTreeSet<EdgeId>> {
        if set.contains(&self.source) {
            return Err(Error::Input("the source cannot be inside a protected set".into()));
        }
        if let Some(&v) = set.iter().find(|&&v| v >= self.n) {
            return Err(Error::Input(format!("unknown vertex {v}")));
        }
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| set.contains(&e.u) != set.contains(&e.v))
            .map(|(id, _)| id)
            .collect())
    }

    /// Contracts `sources` into a single new source. Crossing edges survive as
    /// parallel edges; edges inside `sources` are dropped.
    pub fn merge_sources(&self, sources: &BTreeSet<VertexId>) -> Result<MergedGraph> {
        if sources.is_empty() {
            return Err(Error::Input("cannot merge an empty set of sources".into()));
        }
        if let Some(&v) = sources.iter().find(|&&v| v >= self.n) {
            return Err(Error::Input(format!("unknown source vertex {v}")));
        }
        // merged source is vertex 0, the rest keep their relative order
        let mut vertex_map = vec![0; self.n];
        let mut next = 1;
        for (v, slot) in vertex_map.iter_mut().enumerate() {
            if !sources.contains(&v) {
                *slot = next;
                next += 1;
            }
        }
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            if sources.contains(&e.u) && sources.contains(&e.v) {
                continue;
            }
            edges.push(Edge { u: vertex_map[e.u], v: vertex_map[e.v], cost: e.cost.clone() });
            edge_map.push(id);
        }
        let graph = WeightedGraph::new(next, edges, 0)?;
        Ok(MergedGraph { graph, vertex_map, edge_map })
    }
}

impl fmt::Display for WeightedGraph {
    /// Writes the line-oriented graph file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.n, self.edges.len(), self.source)?;
        for e in &self.edges {
            writeln!(f, "{} {} {}", e.u, e.v, rational::format(&e.cost))?;
        }
        Ok(())
    }
}

/// Result of [`WeightedGraph::merge_sources`].
#[derive(Clone, Debug)]
pub struct MergedGraph {
    pub graph: WeightedGraph,
    /// old vertex -> new vertex (every merged source maps to 0)
    pub vertex_map: Vec<VertexId>,
    /// new edge -> old edge
    pub edge_map: Vec<EdgeId>,
}

/// Parses the text graph format: a header `n m s`, then `m` lines `u v cost`.
/// `#` starts a comment; blank lines are ignored.
pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::Input("graph file is empty".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Input(format!("line {hline}: expected header `n m s`, found `{header}`")));
    }
    let num = |s: &str, what: &str, line: usize| -> Result<usize> {
        s.parse().map_err(|_| Error::Input(format!("line {line}: {what} `{s}` is not a non-negative integer")))
    };
    let n = num(fields[0], "vertex count", hline)?;
    let m = num(fields[1], "edge count", hline)?;
    let s = num(fields[2], "source id", hline)?;
    let mut edges = Vec::with_capacity(m);
    for (line, body) in lines.by_ref().take(m) {
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Input(format!("line {line}: expected `u v cost`, found `{body}`")));
        }
        let u = num(parts[0], "endpoint", line)?;
        let v = num(parts[1], "endpoint", line)?;
        let cost = rational::parse(parts[2]).map_err(|e| Error::Input(format!("line {line}: {e}")))?;
        if u >= n || v >= n {
            return Err(Error::Input(format!("line {line}: endpoint out of range 0..{n}")));
        }
        edges.push(Edge { u, v, cost });
    }
    if edges.len() != m {
        return Err(Error::Input(format!("header declares {m} edges but {} were found", edges.len())));
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Input(format!("line {line}: unexpected content after {m} edges")));
    }
    WeightedGraph::new(n, edges, s)
}

/// An edge set together with its cost and the vertices it disconnects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSolution {
    pub cut_edges: BTreeSet<EdgeId>,
    #[serde(with = "rational::serde_q")]
    pub cost: Q,
    pub protected: BTreeSet<VertexId>,
}

impl CutSolution {
    pub fn from_cut(g: &WeightedGraph, cut_edges: BTreeSet<EdgeId>) -> Result<Self> {
        let protected = g.protected_set(&cut_edges)?;
        let cost = g.cost_of(&cut_edges);
        Ok(CutSolution { cut_edges, cost, protected })
    }

    pub fn empty() -> Self {
        CutSolution { cut_edges: BTreeSet::new(), cost: Q::zero(), protected: BTreeSet::new() }
    }

    /// Re-derives cost and protected set from the graph and compares.
    pub fn verify(&self, g: &WeightedGraph) -> Result<()> {
        let fresh = CutSolution::from_cut(g, self.cut_edges.clone())?;
        if fresh.cost != self.cost {
            return Err(Error::Input(format!(
                "declared cost {} differs from recomputed {}",
                rational::format(&self.cost),
                rational::format(&fresh.cost)
            )));
        }
        if fresh.protected != self.protected {
            return Err(Error::Input("declared protected set differs from recomputed".into()));
        }
        Ok(())
    }
}
