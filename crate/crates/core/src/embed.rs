//! Convex combinations of trees whose cuts dominate the graph's cuts.
//!
//! Every candidate tree comes from a hierarchical decomposition of the vertex
//! set: each cluster hangs below its parent cluster through an edge whose
//! cost is the graph cut around that cluster. Such a tree never undercuts the
//! graph (any graph edge leaving `S` crosses some cluster boundary on the tree
//! path between its endpoints). Multipliers are then chosen by a small LP that
//! minimizes the worst average stretch over the checked subsets, and the
//! resulting factor is measured rather than assumed.

use std::collections::{BTreeSet, VecDeque};

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CutSolution, VertexId, WeightedGraph};
use crate::lp::{LinearProgram, LpOutcome, Sense};
use crate::rational::{self, Q};
use crate::rng;
use crate::tree::RootedTree;

pub const DEFAULT_EXHAUSTIVE_BOUND: usize = 14;
const MAX_EMBED_VERTICES: usize = 128;

#[derive(Clone, Debug)]
pub struct EmbedConfig {
    /// Defaults to ⌈log2 n⌉ + 1.
    pub num_trees: Option<usize>,
    pub seed: u64,
    /// Largest n certified by full subset enumeration.
    pub exhaustive_bound: usize,
    /// Random subsets used above the exhaustive bound.
    pub sample_count: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig { num_trees: None, seed: 0, exhaustive_bound: DEFAULT_EXHAUSTIVE_BOUND, sample_count: 4096 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificationMode {
    Exhaustive { max_n: usize },
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificationKind {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subset: Vec<VertexId>,
    pub tree: usize,
    #[serde(with = "rational::serde_q")]
    pub graph_cut: Q,
    /// `None` when the tree cannot separate the subset at all.
    #[serde(with = "rational::serde_q::opt")]
    pub tree_cut: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub mode: CertificationKind,
    pub subsets_checked: usize,
    pub property1_violations: usize,
    pub worst_violation: Option<Violation>,
    /// max over checked S with w(δ(S)) > 0 of Σ λ_i w^i(δ_i(S)) / w(δ(S))
    #[serde(with = "rational::serde_q")]
    pub stretch: Q,
    pub stretch_witness: Option<Vec<VertexId>>,
    /// subsets with a free graph cut but a positive average tree cut
    pub unbounded_subsets: usize,
}

#[derive(Clone, Debug)]
pub struct TreeEmbedding {
    pub trees: Vec<RootedTree>,
    pub multipliers: Vec<Q>,
    pub certified_stretch: Q,
    pub certification_mode: CertificationKind,
    pub report: CertificationReport,
}

impl TreeEmbedding {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// k = 1, λ = 1, the graph itself as the only tree.
    pub fn identity(g: &WeightedGraph) -> Result<Self> {
        let tree = RootedTree::from_graph(g.clone())?;
        let report = CertificationReport {
            mode: CertificationKind::Exhaustive,
            subsets_checked: 0,
            property1_violations: 0,
            worst_violation: None,
            stretch: Q::one(),
            stretch_witness: None,
            unbounded_subsets: 0,
        };
        Ok(TreeEmbedding {
            trees: vec![tree],
            multipliers: vec![Q::one()],
            certified_stretch: Q::one(),
            certification_mode: CertificationKind::Exhaustive,
            report,
        })
    }
}

/// Subsets of V \ {s} as bitmasks over vertex ids.
type Mask = u128;

fn bit(v: VertexId) -> Mask {
    1u128 << v
}

fn mask_to_vec(mask: Mask, n: usize) -> Vec<VertexId> {
    (0..n).filter(|&v| mask & bit(v) != 0).collect()
}

fn graph_cut(g: &WeightedGraph, mask: Mask) -> Q {
    rational::sum(g.edges().iter().filter(|e| (mask & bit(e.u) != 0) != (mask & bit(e.v) != 0)).map(|e| &e.cost))
}

/// Tree cut of S; auxiliary nodes are placed on their cheaper side.
fn tree_cut(t: &RootedTree, mask: Mask) -> Option<Q> {
    if t.has_auxiliary() {
        return t.separation_cost(|v| mask & bit(v) != 0);
    }
    let mut total = Q::zero();
    for (id, e) in t.graph().edges().iter().enumerate() {
        if (mask & bit(e.u) != 0) != (mask & bit(e.v) != 0) {
            if !t.is_cuttable(id) {
                return None;
            }
            total += &e.cost;
        }
    }
    Some(total)
}

fn check_size(g: &WeightedGraph) -> Result<()> {
    if g.num_vertices() > MAX_EMBED_VERTICES {
        return Err(Error::Refused(format!(
            "tree embeddings support at most {MAX_EMBED_VERTICES} vertices, got {}",
            g.num_vertices()
        )));
    }
    Ok(())
}

fn subsets(g: &WeightedGraph, mode: CertificationMode) -> Result<Vec<Mask>> {
    let others: Vec<VertexId> = g.non_source_vertices().collect();
    match mode {
        CertificationMode::Exhaustive { max_n } => {
            if g.num_vertices() > max_n {
                return Err(Error::Refused(format!(
                    "exhaustive certification is limited to n <= {max_n}, graph has {} vertices",
                    g.num_vertices()
                )));
            }
            let k = others.len();
            Ok((1u64..(1u64 << k))
                .map(|code| {
                    others.iter().enumerate().filter(|(i, _)| code & (1 << i) != 0).fold(0, |m, (_, &v)| m | bit(v))
                })
                .collect())
        }
        CertificationMode::Sampled { count, seed } => {
            let mut r = rng::stream(seed, "embed-subsets", 0);
            let mut out = BTreeSet::new();
            let mut attempts = 0;
            while out.len() < count && attempts < count * 4 {
                attempts += 1;
                let m = others.iter().filter(|_| r.gen_bool(0.5)).fold(0, |m, &v| m | bit(v));
                if m != 0 {
                    out.insert(m);
                }
            }
            // singletons and the full complement are always informative
            for &v in &others {
                out.insert(bit(v));
            }
            out.insert(others.iter().fold(0, |m, &v| m | bit(v)));
            Ok(out.into_iter().collect())
        }
    }
}

/// Certifies both domination properties over the subsets selected by `mode`.
pub fn certify(g: &WeightedGraph, emb: &TreeEmbedding, mode: CertificationMode) -> Result<CertificationReport> {
    check_size(g)?;
    validate_shape(g, emb)?;
    let masks = subsets(g, mode)?;
    let n = g.num_vertices();
    struct Row {
        mask: Mask,
        graph: Q,
        trees: Vec<Option<Q>>,
    }
    let rows: Vec<Row> = masks
        .par_iter()
        .map(|&mask| Row {
            mask,
            graph: graph_cut(g, mask),
            trees: emb.trees.iter().map(|t| tree_cut(t, mask)).collect(),
        })
        .collect();

    let mut violations = 0;
    let mut worst: Option<(Q, Violation)> = None;
    let mut stretch = Q::zero();
    let mut witness = None;
    let mut unbounded = 0;
    for row in &rows {
        for (i, tc) in row.trees.iter().enumerate() {
            let short = match tc {
                None => Some(Q::from_integer((-1).into())),
                Some(t) if *t < row.graph => Some(&row.graph - t),
                _ => None,
            };
            if let Some(gap) = short {
                violations += 1;
                // infinite shortfall (no separating tree cut) ranks first
                let key = if gap.is_negative() { row.graph.clone() + Q::one() } else { gap };
                if worst.as_ref().is_none_or(|(k, _)| key > *k) {
                    worst = Some((
                        key,
                        Violation {
                            subset: mask_to_vec(row.mask, n),
                            tree: i,
                            graph_cut: row.graph.clone(),
                            tree_cut: tc.clone(),
                        },
                    ));
                }
            }
        }
        let avg: Option<Q> = row.trees.iter().zip(&emb.multipliers).try_fold(Q::zero(), |acc, (t, l)| {
            if l.is_zero() {
                Some(acc)
            } else {
                t.as_ref().map(|t| acc + t * l)
            }
        });
        match avg {
            Some(avg) if row.graph.is_positive() => {
                let ratio = avg / &row.graph;
                if ratio > stretch {
                    stretch = ratio;
                    witness = Some(mask_to_vec(row.mask, n));
                }
            }
            Some(avg) if avg.is_zero() => {}
            _ => unbounded += 1,
        }
    }
    Ok(CertificationReport {
        mode: match mode {
            CertificationMode::Exhaustive { .. } => CertificationKind::Exhaustive,
            CertificationMode::Sampled { .. } => CertificationKind::Sampled,
        },
        subsets_checked: rows.len(),
        property1_violations: violations,
        worst_violation: worst.map(|(_, v)| v),
        stretch,
        stretch_witness: witness,
        unbounded_subsets: unbounded,
    })
}

fn validate_shape(g: &WeightedGraph, emb: &TreeEmbedding) -> Result<()> {
    if emb.trees.is_empty() || emb.trees.len() != emb.multipliers.len() {
        return Err(Error::Input("embedding needs one multiplier per tree and at least one tree".into()));
    }
    if emb.multipliers.iter().any(|l| l.is_negative()) || rational::sum(&emb.multipliers) != Q::one() {
        return Err(Error::Input("multipliers must be non-negative and sum to 1".into()));
    }
    for (i, t) in emb.trees.iter().enumerate() {
        if t.root() != g.source()
            || t.num_nodes() < g.num_vertices()
            || (0..g.num_vertices()).any(|v| !t.is_real(v))
            || (g.num_vertices()..t.num_nodes()).any(|v| t.is_real(v))
        {
            return Err(Error::Input(format!(
                "tree {i} must contain every graph vertex as a real node, be rooted at the source, and keep auxiliary nodes after them"
            )));
        }
    }
    Ok(())
}

/// Builds and certifies an embedding. Trees are returned unchanged as the
/// identity embedding.
pub fn build_embedding(g: &WeightedGraph, config: &EmbedConfig) -> Result<TreeEmbedding> {
    let n = g.num_vertices();
    if n < 2 {
        return Err(Error::Input("tree embeddings need at least two vertices".into()));
    }
    check_size(g)?;
    if !g.is_connected() {
        return Err(Error::Input(
            "graph must be connected; vertices unreachable from the source are protected for free and should be removed first"
                .into(),
        ));
    }
    if g.is_tree() {
        return TreeEmbedding::identity(g);
    }
    let k = config.num_trees.unwrap_or_else(|| (usize::BITS - (n - 1).leading_zeros()) as usize + 1).max(1);
    let mut trees: Vec<RootedTree> =
        (0..k).into_par_iter().map(|i| candidate_tree(g, i, config)).collect::<Result<_>>()?;

    let mode = if n <= config.exhaustive_bound {
        CertificationMode::Exhaustive { max_n: config.exhaustive_bound }
    } else {
        CertificationMode::Sampled { count: config.sample_count, seed: config.seed }
    };
    let masks = subsets(g, mode)?;
    let graph_cuts: Vec<Q> = masks.par_iter().map(|&m| graph_cut(g, m)).collect();

    // enforce per-tree domination by scaling up where a tree undercuts the graph
    for t in trees.iter_mut() {
        let alpha = masks
            .par_iter()
            .zip(&graph_cuts)
            .filter(|(_, gc)| gc.is_positive())
            .map(|(&m, gc)| match tree_cut(t, m) {
                Some(tc) if tc.is_positive() => Ok(gc / tc),
                _ => Err(Error::Input("a candidate tree cannot separate a subset with a positive graph cut".into())),
            })
            .try_reduce(Q::zero, |a, b| Ok(if a > b { a } else { b }))?;
        if alpha > Q::one() {
            let costs = t.graph().edges().iter().map(|e| &e.cost * &alpha).collect();
            *t = t.with_costs(costs)?;
        }
    }

    let ratios: Vec<Vec<Q>> = masks
        .par_iter()
        .zip(&graph_cuts)
        .filter(|(_, gc)| gc.is_positive())
        .map(|(&m, gc)| trees.iter().map(|t| tree_cut(t, m).expect("checked above") / gc).collect())
        .collect();
    let multipliers = choose_multipliers(&ratios, trees.len())?;

    let mut emb = TreeEmbedding {
        trees,
        multipliers,
        certified_stretch: Q::zero(),
        certification_mode: CertificationKind::Exhaustive,
        report: CertificationReport {
            mode: CertificationKind::Exhaustive,
            subsets_checked: 0,
            property1_violations: 0,
            worst_violation: None,
            stretch: Q::zero(),
            stretch_witness: None,
            unbounded_subsets: 0,
        },
    };
    drop_unused_trees(&mut emb);
    let report = certify(g, &emb, mode)?;
    emb.certified_stretch = report.stretch.clone();
    emb.certification_mode = report.mode;
    emb.report = report;
    Ok(emb)
}

fn drop_unused_trees(emb: &mut TreeEmbedding) {
    let keep: Vec<bool> = emb.multipliers.iter().map(|l| l.is_positive()).collect();
    let mut i = 0;
    emb.trees.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    emb.multipliers.retain(|l| l.is_positive());
}

/// min C st Σ_i λ_i r_i(S) <= C for every row, Σ λ = 1, λ >= 0, by adding
/// the most violated row until none is violated.
fn choose_multipliers(ratios: &[Vec<Q>], k: usize) -> Result<Vec<Q>> {
    if ratios.is_empty() || k == 1 {
        let mut l = vec![Q::zero(); k];
        l[0] = Q::one();
        return Ok(l);
    }
    let eval = |lambda: &[Q], row: &[Q]| row.iter().zip(lambda).fold(Q::zero(), |acc, (r, l)| acc + r * l);
    let uniform = vec![Q::new(1.into(), (k as i64).into()); k];
    let first = (0..ratios.len()).max_by(|&a, &b| eval(&uniform, &ratios[a]).cmp(&eval(&uniform, &ratios[b]))).unwrap();
    let mut active = vec![first];
    loop {
        let mut lp = LinearProgram::new(k + 1);
        lp.set_cost(k, Q::one());
        for &r in &active {
            let mut coeffs: Vec<(usize, Q)> = ratios[r].iter().cloned().enumerate().collect();
            coeffs.push((k, -Q::one()));
            lp.add_constraint(coeffs, Sense::Le, Q::zero());
        }
        lp.add_constraint((0..k).map(|i| (i, Q::one())).collect(), Sense::Eq, Q::one());
        let sol = match lp.minimize()? {
            LpOutcome::Optimal(s) => s,
            other => return Err(Error::Lp(format!("multiplier LP ended as {other:?}"))),
        };
        let lambda = &sol.x[..k];
        let (worst, value) = ratios.par_iter().enumerate().map(|(i, row)| (i, eval(lambda, row))).reduce(
            || (usize::MAX, Q::from_integer((-1).into())),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
        if value <= sol.x[k] || active.contains(&worst) {
            return Ok(lambda.to_vec());
        }
        active.push(worst);
    }
}

/// Tree 0 is the exact sparsest-cut hierarchy, tree 1 a maximum spanning
/// tree, the rest are hierarchies under randomly perturbed costs.
fn candidate_tree(g: &WeightedGraph, index: usize, config: &EmbedConfig) -> Result<RootedTree> {
    let mut r = rng::stream(config.seed, "embed-tree", index as u64);
    let weights: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| {
            let base = rational::to_f64(&e.cost);
            if index >= 2 {
                base * r.gen_range(0.5..1.5)
            } else {
                base
            }
        })
        .collect();
    let parent = if index == 1 {
        max_spanning_parents(g, &weights)
    } else {
        hierarchy_parents(g, &weights, config.exhaustive_bound, index >= 2, &mut r)
    };
    cut_tree(g, &parent)
}

/// Turns a parent array on V into a rooted tree whose edge costs are the
/// graph cuts around each subtree.
fn cut_tree(g: &WeightedGraph, parent: &[Option<VertexId>]) -> Result<RootedTree> {
    let n = g.num_vertices();
    let mut children = vec![Vec::new(); n];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(v);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([g.source()]);
    while let Some(x) = queue.pop_front() {
        order.push(x);
        queue.extend(children[x].iter().copied());
    }
    if order.len() != n {
        return Err(Error::Input("decomposition did not span the graph".into()));
    }
    let mut below: Vec<Mask> = (0..n).map(bit).collect();
    for &v in order.iter().rev() {
        if let Some(p) = parent[v] {
            below[p] |= below[v];
        }
    }
    let costs: Vec<Q> = (0..n).map(|v| if parent[v].is_some() { graph_cut(g, below[v]) } else { Q::zero() }).collect();
    RootedTree::from_parents(g.source(), parent, &costs, vec![true; n], &vec![true; n])
}

fn max_spanning_parents(g: &WeightedGraph, weights: &[f64]) -> Vec<Option<VertexId>> {
    let n = g.num_vertices();
    let mut ids: Vec<usize> = (0..g.num_edges()).collect();
    ids.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(d: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while d[r] != r {
            r = d[r];
        }
        let mut x = x;
        while d[x] != r {
            let nx = d[x];
            d[x] = r;
            x = nx;
        }
        r
    }
    let mut adj = vec![Vec::new(); n];
    for id in ids {
        let e = g.edge(id);
        let (a, b) = (find(&mut dsu, e.u), find(&mut dsu, e.v));
        if a != b {
            dsu[a] = b;
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[g.source()] = true;
    let mut queue = VecDeque::from([g.source()]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    parent
}

/// Recursive sparsest-cut splitting. Each cluster is represented by one of
/// its vertices (the source for clusters containing it); a split-off part
/// hangs below the representative of the part it left.
fn hierarchy_parents<R: Rng>(
    g: &WeightedGraph,
    weights: &[f64],
    exact_bound: usize,
    random_reps: bool,
    r: &mut R,
) -> Vec<Option<VertexId>> {
    let n = g.num_vertices();
    let mut parent = vec![None; n];
    let mut stack = vec![((0..n).collect::<Vec<_>>(), g.source())];
    while let Some((cluster, rep)) = stack.pop() {
        if cluster.len() <= 1 {
            continue;
        }
        let part = sparsest_split(g, weights, &cluster, rep, exact_bound, r);
        let (stay, moved): (Vec<_>, Vec<_>) = cluster.iter().partition(|v| !part.contains(v));
        let moved_rep = if random_reps {
            *moved.choose(r).expect("split part is non-empty")
        } else {
            // the vertex most tightly tied to the part it leaves
            *moved
                .iter()
                .max_by(|&&a, &&b| {
                    let tie = |x: VertexId| -> f64 {
                        g.neighbors(x).iter().filter(|(y, _)| stay.contains(y)).map(|&(_, e)| weights[e]).sum()
                    };
                    tie(a).total_cmp(&tie(b)).then(b.cmp(&a))
                })
                .unwrap()
        };
        parent[moved_rep] = Some(rep);
        stack.push((stay, rep));
        stack.push((moved, moved_rep));
    }
    parent
}

/// Part B ⊂ cluster (not containing `rep`) minimizing w(A, B) / (|A| |B|).
fn sparsest_split<R: Rng>(
    g: &WeightedGraph,
    weights: &[f64],
    cluster: &[VertexId],
    rep: VertexId,
    exact_bound: usize,
    r: &mut R,
) -> Vec<VertexId> {
    let others: Vec<VertexId> = cluster.iter().copied().filter(|&v| v != rep).collect();
    let in_cluster: BTreeSet<VertexId> = cluster.iter().copied().collect();
    let local_edges: Vec<(VertexId, VertexId, f64)> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| in_cluster.contains(&e.u) && in_cluster.contains(&e.v))
        .map(|(i, e)| (e.u, e.v, weights[i]))
        .collect();
    let size = cluster.len() as f64;
    let ratio = |part: Mask| -> f64 {
        let b = part.count_ones() as f64;
        let crossing: f64 = local_edges
            .iter()
            .filter(|(u, v, _)| (part & bit(*u) != 0) != (part & bit(*v) != 0))
            .map(|(_, _, w)| w)
            .sum();
        crossing / (b * (size - b))
    };
    let best = if cluster.len() <= exact_bound {
        let k = others.len();
        (1u64..(1u64 << k))
            .map(|code| {
                others.iter().enumerate().filter(|(i, _)| code & (1 << i) != 0).fold(0, |m, (_, &v)| m | bit(v))
            })
            .map(|m| (ratio(m), m))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, m)| m)
            .unwrap()
    } else {
        let mut best: Option<(f64, Mask)> = None;
        for _ in 0..8 {
            let mut m: Mask = others.iter().filter(|_| r.gen_bool(0.5)).fold(0, |m, &v| m | bit(v));
            if m == 0 {
                m = bit(others[r.gen_range(0..others.len())]);
            }
            let mut cur = ratio(m);
            loop {
                let step = others
                    .iter()
                    .map(|&v| m ^ bit(v))
                    .filter(|&c| c != 0)
                    .map(|c| (ratio(c), c))
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                match step {
                    Some((val, c)) if val < cur - 1e-12 => {
                        cur = val;
                        m = c;
                    }
                    _ => break,
                }
            }
            if best.is_none_or(|(b, _)| cur < b) {
                best = Some((cur, m));
            }
        }
        best.unwrap().1
    };
    mask_to_vec(best, g.num_vertices())
}

/// Maps a cut of one embedding tree back to the graph: δ(X) where X is the
/// set of real vertices the tree cut protects.
pub fn tree_cut_to_graph_cut(g: &WeightedGraph, tree: &RootedTree, tree_cut: &CutSolution) -> Result<CutSolution> {
    let x = tree.real_protected(&tree_cut.cut_edges)?;
    if x.iter().any(|&v| v >= g.num_vertices()) {
        return Err(Error::Input("tree protects a real node that is not a graph vertex".into()));
    }
    CutSolution::from_cut(g, g.boundary(&x)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeDoc {
    pub parent: Vec<Option<VertexId>>,
    #[serde(with = "rational::serde_q::vec")]
    pub edge_costs: Vec<Q>,
    pub is_real: Vec<bool>,
    pub cuttable: Vec<bool>,
}

/// JSON form of an embedding: parent arrays with per-node edge costs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingDoc {
    pub num_vertices: usize,
    pub source: VertexId,
    pub trees: Vec<TreeDoc>,
    #[serde(with = "rational::serde_q::vec")]
    pub multipliers: Vec<Q>,
    #[serde(with = "rational::serde_q")]
    pub certified_stretch: Q,
    pub certification_mode: CertificationKind,
    pub report: Option<CertificationReport>,
}

impl TreeEmbedding {
    pub fn to_doc(&self) -> EmbeddingDoc {
        let trees = self
            .trees
            .iter()
            .map(|t| {
                let n = t.num_nodes();
                let mut parent = vec![None; n];
                let mut costs = vec![Q::zero(); n];
                let mut cuttable = vec![false; n];
                for v in 0..n {
                    if let Some((p, e)) = t.parent(v) {
                        parent[v] = Some(p);
                        costs[v] = t.cost(e).clone();
                        cuttable[v] = t.is_cuttable(e);
                    }
                }
                TreeDoc { parent, edge_costs: costs, is_real: t.real_flags().to_vec(), cuttable }
            })
            .collect();
        EmbeddingDoc {
            num_vertices: self.trees.first().map_or(0, |t| t.real_flags().iter().filter(|&&r| r).count()),
            source: self.trees.first().map_or(0, |t| t.root()),
            trees,
            multipliers: self.multipliers.clone(),
            certified_stretch: self.certified_stretch.clone(),
            certification_mode: self.certification_mode,
            report: Some(self.report.clone()),
        }
    }

    /// Loads an externally supplied embedding and re-certifies it against `g`
    /// (exhaustively up to `exhaustive_bound`, sampled above). Embeddings whose
    /// trees undercut the graph are rejected with the offending subset.
    pub fn from_doc(g: &WeightedGraph, doc: &EmbeddingDoc, exhaustive_bound: usize, seed: u64) -> Result<Self> {
        if doc.num_vertices != g.num_vertices() || doc.source != g.source() {
            return Err(Error::Input("embedding was built for a different graph".into()));
        }
        let trees = doc
            .trees
            .iter()
            .map(|t| RootedTree::from_parents(doc.source, &t.parent, &t.edge_costs, t.is_real.clone(), &t.cuttable))
            .collect::<Result<Vec<_>>>()?;
        let mut emb = TreeEmbedding {
            trees,
            multipliers: doc.multipliers.clone(),
            certified_stretch: Q::zero(),
            certification_mode: CertificationKind::Exhaustive,
            report: TreeEmbedding::identity_report(),
        };
        let mode = if g.num_vertices() <= exhaustive_bound {
            CertificationMode::Exhaustive { max_n: exhaustive_bound }
        } else {
            CertificationMode::Sampled { count: 4096, seed }
        };
        let report = certify(g, &emb, mode)?;
        if let Some(v) = &report.worst_violation {
            return Err(Error::Input(format!(
                "tree {} undercuts the graph on subset {:?} (graph cut {}, tree cut {})",
                v.tree,
                v.subset,
                rational::format(&v.graph_cut),
                v.tree_cut.as_ref().map_or("none".to_string(), rational::format)
            )));
        }
        if report.unbounded_subsets > 0 {
            return Err(Error::Input("embedding has unbounded stretch on a zero-cost graph cut".into()));
        }
        emb.certified_stretch = report.stretch.clone();
        emb.certification_mode = report.mode;
        emb.report = report;
        Ok(emb)
    }

    fn identity_report() -> CertificationReport {
        CertificationReport {
            mode: CertificationKind::Exhaustive,
            subsets_checked: 0,
            property1_violations: 0,
            worst_violation: None,
            stretch: Q::one(),
            stretch_witness: None,
            unbounded_subsets: 0,
        }
    }
}
