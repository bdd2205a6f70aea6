use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DemographicSpec;
use crate::error::{Error, Result};
use crate::graph::{CutSolution, EdgeId};
use crate::lp::{LinearProgram, LpOutcome, Sense};
use crate::rational::{self, Q};
use crate::rng;
use crate::tree::RootedTree;

/// Cost allowance multiplier: a union of N roundings may cost up to
/// `MARKOV_CONSTANT · N` times the LP objective.
pub const MARKOV_CONSTANT: i64 = 4;
pub const RETRY_CAP: usize = 64;
const BETA: f64 = 2.0;

/// Fractional cut on a tree: x per edge id, y per node (the x-sum along the
/// root path).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionalCut {
    #[serde(with = "rational::serde_q::vec")]
    pub x: Vec<Q>,
    #[serde(with = "rational::serde_q::vec")]
    pub y: Vec<Q>,
    #[serde(with = "rational::serde_q")]
    pub objective: Q,
}

impl FractionalCut {
    /// Derives y and the objective from x.
    pub fn from_x(t: &RootedTree, x: Vec<Q>) -> Result<Self> {
        if x.len() != t.graph().num_edges() {
            return Err(Error::Input("x needs one value per tree edge".into()));
        }
        let mut y = vec![Q::zero(); t.num_nodes()];
        for &v in t.top_down() {
            if let Some((p, e)) = t.parent(v) {
                y[v] = &y[p] + &x[e];
            }
        }
        let objective = t.graph().edges().iter().zip(&x).fold(Q::zero(), |acc, (e, xe)| acc + &e.cost * xe);
        Ok(FractionalCut { x, y, objective })
    }

    /// Checks the LP rows: bounds, path sums at most one, group coverage.
    pub fn is_feasible(&self, t: &RootedTree, spec: &DemographicSpec) -> bool {
        let bounds = self
            .x
            .iter()
            .enumerate()
            .all(|(e, xe)| *xe >= Q::zero() && *xe <= Q::one() && (t.is_cuttable(e) || xe.is_zero()));
        let paths = self.y.iter().all(|y| *y <= Q::one());
        let cover = spec
            .groups
            .iter()
            .enumerate()
            .all(|(h, grp)| rational::sum(grp.members.iter().map(|&v| &self.y[v])) >= spec.required(h));
        bounds && paths && cover
    }
}

/// Optimal solution of the tree LP relaxation, computed exactly.
pub fn demfair_lp_solve(t: &RootedTree, spec: &DemographicSpec) -> Result<FractionalCut> {
    spec.validate(t.num_nodes(), t.root(), &|v| t.is_real(v))?;
    let m = t.graph().num_edges();
    let vars: Vec<EdgeId> = (0..m).filter(|&e| t.is_cuttable(e)).collect();
    let mut index = vec![None; m];
    for (i, &e) in vars.iter().enumerate() {
        index[e] = Some(i);
    }
    let mut lp = LinearProgram::new(vars.len());
    for (i, &e) in vars.iter().enumerate() {
        lp.set_cost(i, t.cost(e).clone());
    }
    for v in 0..t.num_nodes() {
        if t.children(v).is_empty() && v != t.root() {
            let row: Vec<(usize, Q)> =
                t.root_path(v)?.into_iter().filter_map(|e| index[e]).map(|i| (i, Q::one())).collect();
            if !row.is_empty() {
                lp.add_constraint(row, Sense::Le, Q::one());
            }
        }
    }
    for (h, grp) in spec.groups.iter().enumerate() {
        // edge e contributes once for every member below it
        let mut weight = vec![0usize; vars.len()];
        for &v in &grp.members {
            for e in t.root_path(v)? {
                if let Some(i) = index[e] {
                    weight[i] += 1;
                }
            }
        }
        let row =
            weight.into_iter().enumerate().filter(|(_, c)| *c > 0).map(|(i, c)| (i, rational::from_usize(c))).collect();
        lp.add_constraint(row, Sense::Ge, spec.required(h));
    }
    match lp.minimize()? {
        LpOutcome::Optimal(sol) => {
            let mut x = vec![Q::zero(); m];
            for (i, &e) in vars.iter().enumerate() {
                x[e] = sol.x[i].clone();
            }
            FractionalCut::from_x(t, x)
        }
        LpOutcome::Infeasible => Err(Error::Infeasible("the LP relaxation has no feasible point".into())),
        LpOutcome::Unbounded => Err(Error::Lp("bounded relaxation reported unbounded".into())),
    }
}

fn round_edges<R: RngCore>(t: &RootedTree, frac: &FractionalCut, r: &mut R) -> BTreeSet<EdgeId> {
    let mut edges: Vec<EdgeId> = (0..t.graph().num_edges()).collect();
    edges.sort_by_key(|&e| (t.depth(t.lower_endpoint(e)), e));
    let mut blocked = vec![false; t.num_nodes()];
    let mut above = vec![Q::zero(); t.num_nodes()];
    let mut cut = BTreeSet::new();
    for e in edges {
        let c = t.lower_endpoint(e);
        let (u, _) = t.parent(c).expect("lower endpoint has a parent");
        above[c] = &above[u] + &frac.x[e];
        if blocked[u] {
            blocked[c] = true;
            continue;
        }
        let prefix = &above[u];
        if *prefix >= Q::one() || !t.is_cuttable(e) {
            continue;
        }
        let p = &frac.x[e] / (Q::one() - prefix);
        if rng::bernoulli(r, &p) {
            cut.insert(e);
            blocked[c] = true;
        }
    }
    cut
}

/// One pass of dependent rounding: edges by depth, each eligible edge taken
/// with probability x_e / (1 - x(P_e)), never below an edge already taken.
pub fn round_once<R: RngCore>(t: &RootedTree, frac: &FractionalCut, r: &mut R) -> CutSolution {
    CutSolution::from_cut(t.graph(), round_edges(t, frac, r)).expect("rounded edges belong to the tree")
}

/// N = max(1, ⌈10 β ln γ / (ε² min f)⌉) with β = 2 and ln 1 read as 1.
pub fn repetition_count(gamma: usize, epsilon: &Q, min_fraction: &Q) -> usize {
    let log = if gamma <= 1 { 1.0 } else { (gamma as f64).ln() };
    let eps = rational::to_f64(epsilon);
    let n = (10.0 * BETA * log / (eps * eps * rational::to_f64(min_fraction))).ceil();
    (n as usize).max(1)
}

#[derive(Clone, Debug)]
pub struct LpRoundConfig {
    pub epsilon: Q,
    pub seed: u64,
    pub retry_cap: usize,
}

impl LpRoundConfig {
    pub fn new(epsilon: Q, seed: u64) -> Self {
        LpRoundConfig { epsilon, seed, retry_cap: RETRY_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LpRoundResult {
    pub cut: CutSolution,
    pub repetitions: usize,
    pub attempts: usize,
    #[serde(with = "rational::serde_q")]
    pub lp_objective: Q,
    #[serde(with = "rational::serde_q")]
    pub cost_bound: Q,
    pub seed: u64,
}

/// Unions N independent roundings, retrying with fresh streams until the
/// union covers (1-ε) of every group and costs at most 4·N·LP.
pub fn demfair_lp_round(t: &RootedTree, spec: &DemographicSpec, config: &LpRoundConfig) -> Result<LpRoundResult> {
    if !(config.epsilon > Q::zero() && config.epsilon < Q::one()) {
        return Err(Error::Input("epsilon must lie in (0, 1)".into()));
    }
    let frac = demfair_lp_solve(t, spec)?;
    let n_rep = repetition_count(spec.gamma(), &config.epsilon, &spec.min_fraction());
    let bound = rational::q(MARKOV_CONSTANT) * rational::from_usize(n_rep) * &frac.objective;
    let slack = Q::one() - &config.epsilon;

    let mut best: Option<(usize, CutSolution)> = None;
    for attempt in 0..config.retry_cap {
        let master = rng::derive_seed(config.seed, "demfair-lp-round", attempt as u64);
        let parts: Vec<BTreeSet<EdgeId>> = (0..n_rep)
            .into_par_iter()
            .map(|j| round_edges(t, &frac, &mut rng::stream(master, "repetition", j as u64)))
            .collect();
        let union: BTreeSet<EdgeId> = parts.into_iter().flatten().collect();
        let cut = CutSolution::from_cut(t.graph(), union)?;
        let covered = spec.satisfied_with_slack(&cut.protected, &slack);
        if covered && cut.cost <= bound {
            return Ok(LpRoundResult {
                cut,
                repetitions: n_rep,
                attempts: attempt + 1,
                lp_objective: frac.objective,
                cost_bound: bound,
                seed: config.seed,
            });
        }
        let short = spec
            .coverage(&cut.protected)
            .into_iter()
            .enumerate()
            .filter(|&(h, c)| rational::from_usize(c) < &slack * spec.required(h))
            .count();
        if best.as_ref().is_none_or(|(s, b)| short < *s || (short == *s && cut.cost < b.cost)) {
            best = Some((short, cut));
        }
    }
    Err(Error::RetryCapExceeded {
        attempts: config.retry_cap,
        reason: "no union of roundings met both the coverage and the cost bound".into(),
        best: best.map(|(_, c)| Box::new(c)),
    })
}
