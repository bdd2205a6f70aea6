//! Budgeted cuts maximizing protected vertex weight with a protection target.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{self, TreeEmbedding};
use crate::error::{Error, Result};
use crate::graph::{CutSolution, EdgeId, VertexId, WeightedGraph};
use crate::rational::{self, Q};
use crate::tree::RootedTree;

pub const DEFAULT_EPSILON: (i64, i64) = (1, 8);
/// Discretized budgets above this are refused.
const MAX_SCALED_BUDGET: u64 = 1 << 24;

#[derive(Clone, Debug)]
pub struct AuxCutInstance {
    pub graph: WeightedGraph,
    pub budget: Q,
    pub target: usize,
    /// one weight per vertex; the source always weighs 0
    pub weights: Vec<Q>,
}

impl AuxCutInstance {
    pub fn new(graph: WeightedGraph, budget: Q, target: usize, weights: &BTreeMap<VertexId, Q>) -> Result<Self> {
        let n = graph.num_vertices();
        if budget.is_negative() {
            return Err(Error::Input("budget must be non-negative".into()));
        }
        if target > n - 1 {
            return Err(Error::Input(format!("target {target} exceeds the {} non-source vertices", n - 1)));
        }
        let mut w = vec![Q::zero(); n];
        for (&v, a) in weights {
            if v >= n {
                return Err(Error::Input(format!("vertex weight given for unknown vertex {v}")));
            }
            if a.is_negative() {
                return Err(Error::Input(format!("vertex {v} has a negative weight")));
            }
            if v != graph.source() {
                w[v] = a.clone();
            }
        }
        Ok(AuxCutInstance { graph, budget, target, weights: w })
    }

    pub fn value_of(&self, protected: &BTreeSet<VertexId>) -> Q {
        rational::sum(protected.iter().filter(|&&v| v < self.weights.len()).map(|&v| &self.weights[v]))
    }
}

/// Instance file body; the graph is loaded separately.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuxCutDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[serde(with = "rational::serde_q")]
    pub budget: Q,
    pub target: usize,
    #[serde(with = "rational::serde_q::map")]
    pub vertex_weights: BTreeMap<VertexId, Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Discretized {
    /// scaled integer cost per edge; `None` when the edge can never be afforded
    pub costs: Vec<Option<u64>>,
    #[serde(with = "rational::serde_q")]
    pub lambda: Q,
    pub budget: u64,
}

/// λ = ⌈m/ε⌉ / B, w'_e = ⌊λ w_e⌋, B' = ⌈m/ε⌉. With B = 0 only free edges
/// remain usable.
pub fn discretize(costs: &[Q], budget: &Q, epsilon: &Q) -> Result<Discretized> {
    if !epsilon.is_positive() {
        return Err(Error::Input("epsilon must be positive".into()));
    }
    if budget.is_zero() {
        return Ok(Discretized {
            costs: costs.iter().map(|c| c.is_zero().then_some(0)).collect(),
            lambda: Q::zero(),
            budget: 0,
        });
    }
    let m = rational::from_usize(costs.len().max(1));
    let scaled = rational::ceil_int(&(m / epsilon));
    let b = scaled
        .to_u64()
        .filter(|&b| b <= MAX_SCALED_BUDGET)
        .ok_or_else(|| Error::Refused(format!("discretized budget {scaled} is too large; use a larger epsilon")))?;
    let lambda = Q::from_integer(scaled) / budget;
    let costs = costs
        .iter()
        .map(|c| {
            let w: BigInt = rational::floor_int(&(&lambda * c));
            w.to_u64().filter(|&w| w <= b)
        })
        .collect();
    Ok(Discretized { costs, lambda, budget: b })
}

/// ε = 1/(⌊B⌋+1): with integer edge costs the (1+ε) slack then cannot admit
/// any cut costing more than B.
pub fn integral_exact_epsilon(budget: &Q) -> Q {
    Q::new(1.into(), rational::floor_int(budget) + BigInt::one())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuxSolution {
    pub cut: CutSolution,
    #[serde(with = "rational::serde_q")]
    pub value: Q,
}

#[derive(Clone, Debug)]
enum Choice {
    Keep(usize, u64),
    Cut,
}

#[derive(Clone, Debug)]
struct Entry {
    connected: Q,
    choices: Vec<Choice>,
}

/// (connected real count k, spend W) -> least connected weight. Only entries
/// that beat every cheaper entry with the same k are kept.
type Table = BTreeMap<(usize, u64), Entry>;

fn pareto(candidates: Table) -> Table {
    let mut out = Table::new();
    let mut best: Option<(usize, Q)> = None;
    for ((k, w), e) in candidates {
        let dominated = matches!(&best, Some((bk, bc)) if *bk == k && e.connected >= *bc);
        if !dominated {
            best = Some((k, e.connected.clone()));
            out.insert((k, w), e);
        }
    }
    out
}

/// AuxCut on a rooted tree. `weights` holds one entry per tree node
/// (auxiliary nodes must weigh 0); the target counts real nodes.
pub fn auxcut_rooted(t: &RootedTree, weights: &[Q], budget: &Q, target: usize, epsilon: &Q) -> Result<AuxSolution> {
    if weights.len() != t.num_nodes() {
        return Err(Error::Input("one vertex weight per tree node is required".into()));
    }
    let n_real = t.num_real();
    if target > n_real - 1 {
        return Err(Error::Infeasible(format!("target {target} exceeds the {} protectable vertices", n_real - 1)));
    }
    let bt = t.binarize();
    let edge_costs: Vec<Q> = t.graph().edges().iter().map(|e| e.cost.clone()).collect();
    let disc = discretize(&edge_costs, budget, epsilon)?;
    let max_connected = n_real - target;
    let zero = Q::zero();
    let weight = |v: VertexId| if v < weights.len() && v != t.root() { &weights[v] } else { &zero };

    let mut tables: Vec<Table> = vec![Table::new(); bt.num_nodes()];
    for &v in bt.top_down().iter().rev() {
        let own = usize::from(bt.is_real(v));
        let mut cur = Table::new();
        cur.insert((own, 0), Entry { connected: weight(v).clone(), choices: Vec::new() });
        for &(c, e) in bt.children(v) {
            let mut options: Vec<(usize, u64, Q, Choice)> =
                tables[c].iter().map(|(&(k, w), x)| (k, w, x.connected.clone(), Choice::Keep(k, w))).collect();
            // original edge ids survive binarization; new ones are never cuttable
            if bt.is_cuttable(e) {
                if let Some(w) = disc.costs[e] {
                    options.push((0, w, Q::zero(), Choice::Cut));
                }
            }
            let mut next = Table::new();
            for (&(k1, w1), left) in &cur {
                for (k2, w2, conn, choice) in &options {
                    let (k, w) = (k1 + k2, w1 + w2);
                    if k > max_connected || w > disc.budget {
                        continue;
                    }
                    let total = &left.connected + conn;
                    if next.get(&(k, w)).is_none_or(|old: &Entry| total < old.connected) {
                        let mut choices = left.choices.clone();
                        choices.push(choice.clone());
                        next.insert((k, w), Entry { connected: total, choices });
                    }
                }
            }
            cur = pareto(next);
        }
        tables[v] = cur;
    }

    let (key, _) = tables[bt.root()]
        .iter()
        .min_by(|a, b| a.1.connected.cmp(&b.1.connected).then(a.0 .1.cmp(&b.0 .1)))
        .ok_or_else(|| Error::Infeasible("no affordable cut protects the target number of vertices".into()))?;

    let mut cut: BTreeSet<EdgeId> = BTreeSet::new();
    let mut stack = vec![(bt.root(), *key)];
    while let Some((v, k)) = stack.pop() {
        let entry = &tables[v][&k];
        for (&(c, e), choice) in bt.children(v).iter().zip(&entry.choices) {
            match choice {
                Choice::Cut => {
                    cut.insert(e);
                }
                Choice::Keep(kc, wc) => stack.push((c, (*kc, *wc))),
            }
        }
    }
    let cut = CutSolution::from_cut(t.graph(), cut)?;
    let value = rational::sum(cut.protected.iter().map(|&v| weight(v)));
    Ok(AuxSolution { cut, value })
}

/// AuxCut on an instance whose graph is a tree.
pub fn auxcut_tree(inst: &AuxCutInstance, epsilon: &Q) -> Result<AuxSolution> {
    let t = RootedTree::from_graph(inst.graph.clone())?;
    auxcut_rooted(&t, &inst.weights, &inst.budget, inst.target, epsilon)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneralAuxSolution {
    pub solution: AuxSolution,
    pub tree: usize,
    /// budget handed to every tree instance: C_embed · B
    #[serde(with = "rational::serde_q")]
    pub tree_budget: Q,
}

/// Solves each embedding tree with budget C_embed·B, maps the tree cuts back
/// to δ(X_i) and keeps the most valuable (then cheapest, then lowest index).
pub fn auxcut_general(inst: &AuxCutInstance, emb: &TreeEmbedding, epsilon: &Q) -> Result<GeneralAuxSolution> {
    let tree_budget = &inst.budget * &emb.certified_stretch;
    let per_tree: Vec<Result<AuxSolution>> = emb
        .trees
        .par_iter()
        .map(|t| {
            let mut w = inst.weights.clone();
            w.resize(t.num_nodes(), Q::zero());
            let local = auxcut_rooted(t, &w, &tree_budget, inst.target, epsilon)?;
            let cut = embed::tree_cut_to_graph_cut(&inst.graph, t, &local.cut)?;
            let value = inst.value_of(&cut.protected);
            Ok(AuxSolution { cut, value })
        })
        .collect();
    let mut best: Option<(usize, AuxSolution)> = None;
    for (i, r) in per_tree.into_iter().enumerate() {
        match r {
            Ok(s) => {
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| s.value > b.value || (s.value == b.value && s.cut.cost < b.cut.cost));
                if better {
                    best = Some((i, s));
                }
            }
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    best.map(|(tree, solution)| GeneralAuxSolution { solution, tree, tree_budget })
        .ok_or_else(|| Error::Infeasible("no embedding tree admits an affordable cut meeting the target".into()))
}
