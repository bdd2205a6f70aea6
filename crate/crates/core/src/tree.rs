//! Rooted trees with auxiliary (non-real) nodes and non-cuttable edges.

use std::collections::{BTreeSet, VecDeque};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, VertexId, WeightedGraph};
use crate::rational::Q;

/// A tree rooted at its graph's source. Node ids coincide with the vertex ids
/// of the graph the tree was derived from; auxiliary nodes come after them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    graph: WeightedGraph,
    parent: Vec<Option<(VertexId, EdgeId)>>,
    children: Vec<Vec<(VertexId, EdgeId)>>,
    depth: Vec<usize>,
    /// root first, every node after its parent
    order: Vec<VertexId>,
    /// lower endpoint of each edge
    edge_child: Vec<VertexId>,
    is_real: Vec<bool>,
    cuttable: Vec<bool>,
}

impl RootedTree {
    pub fn new(graph: WeightedGraph, is_real: Vec<bool>, cuttable: Vec<bool>) -> Result<Self> {
        let n = graph.num_vertices();
        if is_real.len() != n || cuttable.len() != graph.num_edges() {
            return Err(Error::Input("tree flag vectors do not match the node and edge counts".into()));
        }
        if !graph.is_tree() {
            return Err(Error::Input("graph is not a tree".into()));
        }
        let root = graph.source();
        if !is_real[root] {
            return Err(Error::Input("tree root must be a real vertex".into()));
        }
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0; n];
        let mut edge_child = vec![0; graph.num_edges()];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(x) = queue.pop_front() {
            order.push(x);
            let mut nbrs: Vec<_> = graph.neighbors(x).to_vec();
            nbrs.sort_unstable();
            for (y, e) in nbrs {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some((x, e));
                    children[x].push((y, e));
                    depth[y] = depth[x] + 1;
                    edge_child[e] = y;
                    queue.push_back(y);
                }
            }
        }
        Ok(RootedTree { graph, parent, children, depth, order, edge_child, is_real, cuttable })
    }

    /// Every node real, every edge cuttable.
    pub fn from_graph(graph: WeightedGraph) -> Result<Self> {
        let n = graph.num_vertices();
        let m = graph.num_edges();
        Self::new(graph, vec![true; n], vec![true; m])
    }

    /// Builds a tree from a parent array. `costs[v]` is the cost of the edge
    /// from `v` to its parent; edges are numbered in increasing child order.
    pub fn from_parents(
        root: VertexId,
        parents: &[Option<VertexId>],
        costs: &[Q],
        is_real: Vec<bool>,
        cuttable_by_child: &[bool],
    ) -> Result<Self> {
        let n = parents.len();
        if costs.len() != n || is_real.len() != n || cuttable_by_child.len() != n {
            return Err(Error::Input("parent, cost and flag arrays must have equal length".into()));
        }
        let mut edges = Vec::new();
        let mut cuttable = Vec::new();
        for (v, p) in parents.iter().enumerate() {
            match (v == root, p) {
                (true, None) => {}
                (true, Some(_)) => return Err(Error::Input("root must not have a parent".into())),
                (false, None) => return Err(Error::Input(format!("node {v} has no parent"))),
                (false, Some(p)) => {
                    if *p >= n {
                        return Err(Error::Input(format!("node {v} has unknown parent {p}")));
                    }
                    edges.push(Edge { u: *p, v, cost: costs[v].clone() });
                    cuttable.push(cuttable_by_child[v]);
                }
            }
        }
        let graph = WeightedGraph::new(n, edges, root)?;
        Self::new(graph, is_real, cuttable)
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn root(&self) -> VertexId {
        self.graph.source()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn is_real(&self, v: VertexId) -> bool {
        self.is_real[v]
    }

    pub fn real_flags(&self) -> &[bool] {
        &self.is_real
    }

    pub fn is_cuttable(&self, e: EdgeId) -> bool {
        self.cuttable[e]
    }

    pub fn cuttable_flags(&self) -> &[bool] {
        &self.cuttable
    }

    pub fn cost(&self, e: EdgeId) -> &Q {
        &self.graph.edge(e).cost
    }

    pub fn parent(&self, v: VertexId) -> Option<(VertexId, EdgeId)> {
        self.parent[v]
    }

    pub fn children(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.children[v]
    }

    pub fn depth(&self, v: VertexId) -> usize {
        self.depth[v]
    }

    /// Root first, each node after its parent.
    pub fn top_down(&self) -> &[VertexId] {
        &self.order
    }

    /// The endpoint of `e` farther from the root.
    pub fn lower_endpoint(&self, e: EdgeId) -> VertexId {
        self.edge_child[e]
    }

    pub fn real_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.num_nodes()).filter(move |&v| self.is_real[v])
    }

    pub fn num_real(&self) -> usize {
        self.is_real.iter().filter(|&&r| r).count()
    }

    pub fn has_auxiliary(&self) -> bool {
        self.is_real.iter().any(|&r| !r)
    }

    /// Unique root-to-`v` edge sequence.
    pub fn root_path(&self, v: VertexId) -> Result<Vec<EdgeId>> {
        if v >= self.num_nodes() {
            return Err(Error::Input(format!("unknown tree node {v}")));
        }
        let mut path = Vec::with_capacity(self.depth[v]);
        let mut cur = v;
        while let Some((p, e)) = self.parent[cur] {
            path.push(e);
            cur = p;
        }
        path.reverse();
        Ok(path)
    }

    /// Real nodes separated from the root by `cut`.
    pub fn real_protected(&self, cut: &BTreeSet<EdgeId>) -> Result<BTreeSet<VertexId>> {
        Ok(self.graph.protected_set(cut)?.into_iter().filter(|&v| self.is_real[v]).collect())
    }

    /// Same shape, new edge costs (indexed by edge id).
    pub fn with_costs(&self, costs: Vec<Q>) -> Result<Self> {
        if costs.len() != self.graph.num_edges() {
            return Err(Error::Input("cost vector length does not match the edge count".into()));
        }
        let edges = self.graph.edges().iter().zip(costs).map(|(e, cost)| Edge { u: e.u, v: e.v, cost }).collect();
        let graph = WeightedGraph::new(self.num_nodes(), edges, self.root())?;
        Self::new(graph, self.is_real.clone(), self.cuttable.clone())
    }

    /// Cheapest set of cuttable edges separating the real nodes flagged by
    /// `inside` from the other real nodes (the root is always outside).
    /// Auxiliary nodes take whichever side is cheaper. `None` when only
    /// non-cuttable edges could do it.
    pub fn separation_cost(&self, inside: impl Fn(VertexId) -> bool) -> Option<Q> {
        let n = self.num_nodes();
        // best[v][side]: cheapest cost inside the subtree of v with v on `side`
        let mut best: Vec<[Option<Q>; 2]> = vec![[None, None]; n];
        for &v in self.order.iter().rev() {
            let allowed: [bool; 2] = if v == self.root() {
                [true, false]
            } else if self.is_real[v] {
                let side = inside(v);
                [!side, side]
            } else {
                [true, true]
            };
            for side in 0..2 {
                if !allowed[side] {
                    continue;
                }
                let mut total = Some(Q::zero());
                for &(c, e) in &self.children[v] {
                    let keep = best[c][side].clone();
                    let split =
                        if self.cuttable[e] { best[c][1 - side].as_ref().map(|x| x + self.cost(e)) } else { None };
                    let pick = match (keep, split) {
                        (Some(a), Some(b)) => Some(if b < a { b } else { a }),
                        (a, b) => a.or(b),
                    };
                    total = match (total, pick) {
                        (Some(t), Some(p)) => Some(t + p),
                        _ => None,
                    };
                }
                best[v][side] = total;
            }
        }
        best[self.root()][0].clone()
    }

    /// Replaces every node with more than two children by a cascade of
    /// auxiliary nodes joined with non-cuttable zero-cost edges. Original
    /// edges keep their ids, costs and cuttability; only their upper endpoint
    /// may move onto an auxiliary node.
    pub fn binarize(&self) -> RootedTree {
        if self.order.iter().all(|&v| self.children[v].len() <= 2) {
            return self.clone();
        }
        let mut edges: Vec<Edge> = self.graph.edges().to_vec();
        let mut cuttable = self.cuttable.clone();
        let mut is_real = self.is_real.clone();
        let mut next = self.num_nodes();
        for &v in &self.order {
            let kids = &self.children[v];
            if kids.len() <= 2 {
                continue;
            }
            let mut holder = v;
            let mut rest = &kids[1..];
            while rest.len() > 1 {
                let aux = next;
                next += 1;
                is_real.push(false);
                edges.push(Edge { u: holder, v: aux, cost: Q::zero() });
                cuttable.push(false);
                let take = if rest.len() == 2 { 2 } else { 1 };
                for &(_, e) in &rest[..take] {
                    edges[e].u = aux;
                    edges[e].v = self.edge_child[e];
                }
                rest = &rest[take..];
                holder = aux;
            }
        }
        let graph = WeightedGraph::new(next, edges, self.root()).expect("binarized tree stays well-formed");
        RootedTree::new(graph, is_real, cuttable).expect("binarized tree stays a tree")
    }
}
