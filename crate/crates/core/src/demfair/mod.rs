//! Minimum-cost cuts protecting a required fraction of every demographic group.

mod dp;
mod relax;

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{self, TreeEmbedding};
use crate::error::{Error, Result};
use crate::graph::{CutSolution, VertexId, WeightedGraph};
use crate::rational::{self, Q};

pub use dp::{demfair_tree_dp, DpConfig, DEFAULT_MEMORY_BUDGET};
pub use relax::{
    demfair_lp_round, demfair_lp_solve, repetition_count, round_once, FractionalCut, LpRoundConfig, LpRoundResult,
    MARKOV_CONSTANT, RETRY_CAP,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub members: BTreeSet<VertexId>,
    #[serde(with = "rational::serde_q")]
    pub fraction: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicSpec {
    pub groups: Vec<Group>,
}

impl DemographicSpec {
    pub fn new(groups: Vec<Group>) -> Self {
        DemographicSpec { groups }
    }

    /// One group holding every non-source vertex with fraction T/(n-1).
    pub fn single_group(g: &WeightedGraph, target: usize) -> Result<Self> {
        let n = g.num_vertices();
        if target == 0 || target > n - 1 {
            return Err(Error::Input(format!("target must lie in 1..={}, got {target}", n - 1)));
        }
        Ok(DemographicSpec {
            groups: vec![Group {
                members: g.non_source_vertices().collect(),
                fraction: Q::new(target.into(), (n - 1).into()),
            }],
        })
    }

    pub fn gamma(&self) -> usize {
        self.groups.len()
    }

    /// Checks ids against `num_nodes` nodes, excluding the root and any node
    /// flagged non-real.
    pub fn validate(&self, num_nodes: usize, root: VertexId, is_real: &dyn Fn(VertexId) -> bool) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Input("at least one group is required".into()));
        }
        for (h, grp) in self.groups.iter().enumerate() {
            if grp.members.is_empty() {
                return Err(Error::Input(format!("group {h} is empty")));
            }
            if !(grp.fraction > Q::zero() && grp.fraction <= Q::one()) {
                return Err(Error::Input(format!("group {h}: fraction must lie in (0, 1]")));
            }
            for &v in &grp.members {
                if v >= num_nodes || v == root || !is_real(v) {
                    return Err(Error::Input(format!("group {h}: member {v} is not a real non-source vertex")));
                }
            }
        }
        Ok(())
    }

    pub fn validate_for(&self, g: &WeightedGraph) -> Result<()> {
        self.validate(g.num_vertices(), g.source(), &|_| true)
    }

    pub fn required(&self, h: usize) -> Q {
        &self.groups[h].fraction * rational::from_usize(self.groups[h].members.len())
    }

    /// Protected members per group.
    pub fn coverage(&self, protected: &BTreeSet<VertexId>) -> Vec<usize> {
        self.groups.iter().map(|grp| grp.members.intersection(protected).count()).collect()
    }

    /// |V_h ∩ protected| >= slack · f_h · n_h for every group.
    pub fn satisfied_with_slack(&self, protected: &BTreeSet<VertexId>, slack: &Q) -> bool {
        self.coverage(protected)
            .into_iter()
            .enumerate()
            .all(|(h, c)| rational::from_usize(c) >= slack * self.required(h))
    }

    pub fn is_satisfied_by(&self, protected: &BTreeSet<VertexId>) -> bool {
        self.satisfied_with_slack(protected, &Q::one())
    }

    pub fn min_fraction(&self) -> Q {
        self.groups.iter().map(|g| g.fraction.clone()).min().unwrap_or_else(Q::one)
    }
}

#[derive(Clone, Debug)]
pub enum Method {
    Dp(DpConfig),
    Lp(LpRoundConfig),
}

/// Result of solving on a general graph through a tree embedding.
#[derive(Clone, Debug, Serialize)]
pub struct GeneralSolution {
    pub cut: CutSolution,
    /// index of the embedding tree whose mapped cut was cheapest
    pub tree: usize,
    /// mapped graph cost per tree, `None` where the tree instance failed
    #[serde(serialize_with = "serialize_opt_costs")]
    pub tree_costs: Vec<Option<Q>>,
    pub rounding: Option<LpRoundResult>,
}

fn serialize_opt_costs<S: serde::Serializer>(v: &[Option<Q>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.as_ref().map(rational::format))?;
    }
    seq.end()
}

/// Solves every embedding tree, maps each tree cut to δ(X_i) in the graph
/// and keeps the cheapest.
pub fn demfair_general(
    g: &WeightedGraph,
    spec: &DemographicSpec,
    method: &Method,
    emb: &TreeEmbedding,
) -> Result<GeneralSolution> {
    spec.validate_for(g)?;
    let per_tree: Vec<Result<(CutSolution, Option<LpRoundResult>)>> = emb
        .trees
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let (tree_cut, info) = match method {
                Method::Dp(cfg) => (demfair_tree_dp(t, spec, cfg)?, None),
                Method::Lp(cfg) => {
                    let cfg = LpRoundConfig {
                        seed: crate::rng::derive_seed(cfg.seed, "demfair-tree", i as u64),
                        ..cfg.clone()
                    };
                    let r = demfair_lp_round(t, spec, &cfg)?;
                    (r.cut.clone(), Some(r))
                }
            };
            Ok((embed::tree_cut_to_graph_cut(g, t, &tree_cut)?, info))
        })
        .collect();

    let mut best: Option<(usize, CutSolution, Option<LpRoundResult>)> = None;
    let mut tree_costs = Vec::with_capacity(per_tree.len());
    let mut first_failure = None;
    for (i, r) in per_tree.into_iter().enumerate() {
        match r {
            Ok((cut, info)) => {
                tree_costs.push(Some(cut.cost.clone()));
                if best.as_ref().is_none_or(|(_, b, _)| cut.cost < b.cost) {
                    best = Some((i, cut, info));
                }
            }
            Err(e @ (Error::Infeasible(_) | Error::RetryCapExceeded { .. })) => {
                tree_costs.push(None);
                first_failure.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((tree, cut, rounding)) => Ok(GeneralSolution { cut, tree, tree_costs, rounding }),
        None => Err(first_failure.unwrap_or_else(|| Error::Infeasible("no embedding tree admits a solution".into()))),
    }
}
