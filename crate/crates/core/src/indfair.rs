//! Cheapest budget admitting a distribution over cuts that protects every
//! vertex with its requested probability.
//!
//! For a fixed budget the restricted primal over the cuts generated so far is
//! solved exactly. When it is infeasible its dual yields a point (y, μ) with
//! Σ p_v y_v = μ + 1 and y(prot F) ≤ μ on every generated cut; AuxCut with
//! vertex weights y then either finds a cut beating μ, which joins the
//! support, or proves that no affordable cut does, which certifies the
//! budget infeasible.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auxcut::{self, AuxCutInstance};
use crate::embed::TreeEmbedding;
use crate::error::{Error, Result};
use crate::graph::{CutSolution, VertexId, WeightedGraph};
use crate::lp::{LinearProgram, LpOutcome, Sense};
use crate::rational::{self, Q};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtectionSpec {
    pub target: usize,
    /// one probability per vertex; the source's entry is ignored
    pub probabilities: Vec<Q>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtectionDoc {
    pub target: usize,
    #[serde(with = "rational::serde_q::map")]
    pub probabilities: BTreeMap<VertexId, Q>,
}

impl ProtectionSpec {
    /// Missing vertices default to probability 0.
    pub fn new(g: &WeightedGraph, target: usize, probabilities: &BTreeMap<VertexId, Q>) -> Result<Self> {
        let n = g.num_vertices();
        if target > n - 1 {
            return Err(Error::Input(format!("target {target} exceeds the {} non-source vertices", n - 1)));
        }
        let mut p = vec![Q::zero(); n];
        for (&v, x) in probabilities {
            if v >= n {
                return Err(Error::Input(format!("probability given for unknown vertex {v}")));
            }
            if !rational::is_probability(x) {
                return Err(Error::Input(format!("probability of vertex {v} is outside [0, 1]")));
            }
            if v != g.source() {
                p[v] = x.clone();
            }
        }
        Ok(ProtectionSpec { target, probabilities: p })
    }

    pub fn from_doc(g: &WeightedGraph, doc: &ProtectionDoc) -> Result<Self> {
        Self::new(g, doc.target, &doc.probabilities)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualPoint {
    /// one entry per vertex; the source's is 0
    #[serde(with = "rational::serde_q::vec")]
    pub y: Vec<Q>,
    #[serde(with = "rational::serde_q")]
    pub mu: Q,
}

impl DualPoint {
    pub fn weight_of(&self, protected: &BTreeSet<VertexId>) -> Q {
        rational::sum(protected.iter().map(|&v| &self.y[v]))
    }

    /// Σ p_v y_v - μ
    pub fn margin(&self, p: &[Q]) -> Q {
        p.iter().zip(&self.y).fold(-&self.mu, |acc, (a, b)| acc + a * b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutDistribution {
    pub support: Vec<CutSolution>,
    #[serde(with = "rational::serde_q::vec")]
    pub probabilities: Vec<Q>,
    /// protection probability per vertex
    #[serde(with = "rational::serde_q::vec")]
    pub marginals: Vec<Q>,
}

impl CutDistribution {
    pub fn new(support: Vec<CutSolution>, probabilities: Vec<Q>, num_vertices: usize) -> Self {
        let marginals = Self::marginals_of(&support, &probabilities, num_vertices);
        CutDistribution { support, probabilities, marginals }
    }

    pub fn point_mass(cut: CutSolution, num_vertices: usize) -> Self {
        Self::new(vec![cut], vec![Q::one()], num_vertices)
    }

    fn marginals_of(support: &[CutSolution], probabilities: &[Q], n: usize) -> Vec<Q> {
        let mut m = vec![Q::zero(); n];
        for (cut, x) in support.iter().zip(probabilities) {
            for &v in &cut.protected {
                if v < n {
                    m[v] += x;
                }
            }
        }
        m
    }

    /// Re-derives every support cut and the marginals and checks them against
    /// the budget class `max_cost` and the target.
    pub fn verify(&self, g: &WeightedGraph, max_cost: &Q, target: usize) -> Result<()> {
        if self.support.is_empty() || self.support.len() != self.probabilities.len() {
            return Err(Error::Input("support and probabilities must be non-empty and aligned".into()));
        }
        if self.probabilities.iter().any(|x| x.is_negative()) || rational::sum(&self.probabilities) != Q::one() {
            return Err(Error::Input("probabilities must be non-negative and sum to 1".into()));
        }
        for cut in &self.support {
            cut.verify(g)?;
            if cut.cost > *max_cost {
                return Err(Error::Input(format!(
                    "support cut costs {} above the budget class",
                    rational::format(&cut.cost)
                )));
            }
            if cut.protected.len() < target {
                return Err(Error::Input("support cut protects fewer vertices than the target".into()));
            }
        }
        if Self::marginals_of(&self.support, &self.probabilities, g.num_vertices()) != self.marginals {
            return Err(Error::Input("declared marginals differ from the support".into()));
        }
        Ok(())
    }
}

/// Draws a support cut with its probability.
pub fn sample(dist: &CutDistribution, seed: u64) -> CutSolution {
    sample_from(dist, &mut rng::stream(seed, "sample", 0))
}

pub fn sample_from<R: rand::RngCore>(dist: &CutDistribution, r: &mut R) -> CutSolution {
    let mut left = Q::one();
    for (cut, x) in dist.support.iter().zip(&dist.probabilities) {
        if left.is_positive() && rng::bernoulli(r, &(x / &left)) {
            return cut.clone();
        }
        left -= x;
    }
    dist.support.last().expect("distribution has a support").clone()
}

#[derive(Clone, Debug)]
pub struct IndFairConfig {
    /// sweep step
    pub epsilon: Q,
    /// discretization slack inside the separation oracle
    pub aux_epsilon: Q,
    /// separation rounds per budget; defaults to 50·n
    pub iteration_cap: Option<usize>,
}

impl IndFairConfig {
    pub fn new(epsilon: Q) -> Self {
        IndFairConfig {
            epsilon,
            aux_epsilon: Q::new(auxcut::DEFAULT_EPSILON.0.into(), auxcut::DEFAULT_EPSILON.1.into()),
            iteration_cap: None,
        }
    }

    /// (1 + ε_aux) · C_embed
    pub fn class_factor(&self, emb: &TreeEmbedding) -> Q {
        (Q::one() + &self.aux_epsilon) * &emb.certified_stretch
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Separation {
    /// no affordable cut beats μ; `vacuous` when no affordable cut meets the target at all
    Membership {
        vacuous: bool,
    },
    Violation(CutSolution),
}

/// Membership test of (y, μ) against all cuts of cost at most B.
pub fn separate(
    g: &WeightedGraph,
    target: usize,
    budget: &Q,
    point: &DualPoint,
    emb: &TreeEmbedding,
    aux_epsilon: &Q,
) -> Result<Separation> {
    let inst = AuxCutInstance {
        graph: g.clone(),
        budget: budget.clone(),
        target,
        weights: point.y.iter().enumerate().map(|(v, y)| if v == g.source() { Q::zero() } else { y.clone() }).collect(),
    };
    match auxcut::auxcut_general(&inst, emb, aux_epsilon) {
        Ok(out) if out.solution.value > point.mu => Ok(Separation::Violation(out.solution.cut)),
        Ok(_) => Ok(Separation::Membership { vacuous: false }),
        Err(Error::Infeasible(_)) => Ok(Separation::Membership { vacuous: true }),
        Err(e) => Err(e),
    }
}

/// Basic solution of Σ x_F = 1, Σ_{F ∋ v} x_F ≥ p_v, x ≥ 0 over `columns`
/// (protected sets), or `None` when infeasible.
pub(crate) fn restricted_primal(columns: &[BTreeSet<VertexId>], p: &[Q], source: VertexId) -> Result<Option<Vec<Q>>> {
    let mut lp = LinearProgram::new(columns.len());
    lp.add_constraint((0..columns.len()).map(|j| (j, Q::one())).collect(), Sense::Eq, Q::one());
    for (v, pv) in p.iter().enumerate() {
        if v == source || pv.is_zero() {
            continue;
        }
        let row: Vec<(usize, Q)> =
            columns.iter().enumerate().filter(|(_, c)| c.contains(&v)).map(|(j, _)| (j, Q::one())).collect();
        lp.add_constraint(row, Sense::Ge, pv.clone());
    }
    match lp.minimize()? {
        LpOutcome::Optimal(sol) => Ok(Some(sol.x)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Lp("feasibility LP reported unbounded".into())),
    }
}

/// max Σ p y - μ st y(F) ≤ μ for every column, Σ p y - μ ≤ 1, y ≥ 0. The
/// optimum is 1 exactly when the restricted primal is infeasible, and the
/// maximizer is then a normalized certificate.
pub(crate) fn restricted_dual(columns: &[BTreeSet<VertexId>], p: &[Q], source: VertexId) -> Result<DualPoint> {
    let n = p.len();
    // variables: y_0..y_{n-1}, μ+ = n, μ- = n+1
    let (mp, mn) = (n, n + 1);
    let mut lp = LinearProgram::new(n + 2);
    for (v, pv) in p.iter().enumerate() {
        if v != source {
            lp.set_cost(v, -pv.clone());
        }
    }
    lp.set_cost(mp, Q::one());
    lp.set_cost(mn, -Q::one());
    for col in columns {
        let mut row: Vec<(usize, Q)> = col.iter().filter(|&&v| v != source).map(|&v| (v, Q::one())).collect();
        row.push((mp, -Q::one()));
        row.push((mn, Q::one()));
        lp.add_constraint(row, Sense::Le, Q::zero());
    }
    let mut norm: Vec<(usize, Q)> =
        p.iter().enumerate().filter(|(v, pv)| *v != source && !pv.is_zero()).map(|(v, pv)| (v, pv.clone())).collect();
    norm.push((mp, -Q::one()));
    norm.push((mn, Q::one()));
    lp.add_constraint(norm, Sense::Le, Q::one());
    lp.add_constraint(vec![(source, Q::one())], Sense::Eq, Q::zero());
    let sol = match lp.minimize()? {
        LpOutcome::Optimal(s) => s,
        other => return Err(Error::Lp(format!("certificate LP ended as {other:?}"))),
    };
    let mu = &sol.x[mp] - &sol.x[mn];
    Ok(DualPoint { y: sol.x[..n].to_vec(), mu })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum RoundOutcome {
    Feasible { distribution: CutDistribution, oracle_calls: usize },
    Infeasible { certificate: DualPoint, oracle_calls: usize },
}

impl RoundOutcome {
    pub fn oracle_calls(&self) -> usize {
        match self {
            RoundOutcome::Feasible { oracle_calls, .. } | RoundOutcome::Infeasible { oracle_calls, .. } => {
                *oracle_calls
            }
        }
    }
}

/// Either a distribution over cuts of cost at most (1+ε_aux)·C_embed·B
/// meeting every p_v, or a dual certificate that no distribution over cuts
/// of cost at most B does.
pub fn feasibility_round(
    g: &WeightedGraph,
    spec: &ProtectionSpec,
    budget: &Q,
    emb: &TreeEmbedding,
    config: &IndFairConfig,
) -> Result<RoundOutcome> {
    let n = g.num_vertices();
    let source = g.source();
    let cap = config.iteration_cap.unwrap_or(50 * n);
    let seed_inst = AuxCutInstance {
        graph: g.clone(),
        budget: budget.clone(),
        target: spec.target,
        weights: spec.probabilities.clone(),
    };
    let mut calls = 1;
    let first = match auxcut::auxcut_general(&seed_inst, emb, &config.aux_epsilon) {
        Ok(out) => out.solution.cut,
        Err(Error::Infeasible(_)) => {
            // no cut of cost at most B meets the target, so every point is in Q(B)
            let certificate = DualPoint { y: vec![Q::zero(); n], mu: -Q::one() };
            return Ok(RoundOutcome::Infeasible { certificate, oracle_calls: calls });
        }
        Err(e) => return Err(e),
    };
    let mut support = vec![first];
    let mut columns: Vec<BTreeSet<VertexId>> = vec![support[0].protected.clone()];

    for _ in 0..cap {
        if let Some(x) = restricted_primal(&columns, &spec.probabilities, source)? {
            let (cuts, probs): (Vec<_>, Vec<_>) =
                support.iter().cloned().zip(x).filter(|(_, xj)| xj.is_positive()).unzip();
            return Ok(RoundOutcome::Feasible {
                distribution: CutDistribution::new(cuts, probs, n),
                oracle_calls: calls,
            });
        }
        let point = restricted_dual(&columns, &spec.probabilities, source)?;
        let margin = point.margin(&spec.probabilities);
        if !margin.is_positive() {
            return Err(Error::Lp("infeasible restricted system produced a non-separating dual".into()));
        }
        let point = DualPoint { y: point.y.iter().map(|y| y / &margin).collect(), mu: &point.mu / &margin };
        calls += 1;
        match separate(g, spec.target, budget, &point, emb, &config.aux_epsilon)? {
            Separation::Membership { .. } => {
                return Ok(RoundOutcome::Infeasible { certificate: point, oracle_calls: calls });
            }
            Separation::Violation(cut) => {
                if columns.contains(&cut.protected) {
                    return Err(Error::Lp("separation returned a cut that is already in the support".into()));
                }
                columns.push(cut.protected.clone());
                support.push(cut);
            }
        }
    }
    Err(Error::Unresolved { iterations: cap })
}

/// Candidate budgets: 0, w_min·(1+ε)^j below w(E), and w(E).
pub fn budget_grid(g: &WeightedGraph, epsilon: &Q) -> Vec<Q> {
    let total = g.total_cost();
    let mut grid = vec![Q::zero()];
    if let Some(w_min) = g.min_positive_cost() {
        let step = Q::one() + epsilon;
        let mut b = w_min;
        while b < total {
            grid.push(b.clone());
            b *= &step;
        }
        grid.push(total);
    }
    grid.dedup();
    grid
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepPoint {
    #[serde(with = "rational::serde_q")]
    pub budget: Q,
    pub verdict: String,
    pub oracle_calls: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndFairSolution {
    #[serde(with = "rational::serde_q")]
    pub budget: Q,
    /// support cuts cost at most this factor times `budget`
    #[serde(with = "rational::serde_q")]
    pub class_factor: Q,
    pub distribution: CutDistribution,
    pub trace: Vec<SweepPoint>,
    /// every budget above the first feasible one was also feasible
    pub monotone: bool,
    pub oracle_calls: usize,
}

/// Probes every grid budget and returns the smallest one admitting a
/// distribution.
pub fn indfair_solve(
    g: &WeightedGraph,
    spec: &ProtectionSpec,
    emb: &TreeEmbedding,
    config: &IndFairConfig,
) -> Result<IndFairSolution> {
    if !(config.epsilon.is_positive() && config.epsilon < Q::one()) {
        return Err(Error::Input("epsilon must lie in (0, 1)".into()));
    }
    let grid = budget_grid(g, &config.epsilon);
    let outcomes: Vec<Result<RoundOutcome>> =
        grid.par_iter().map(|b| feasibility_round(g, spec, b, emb, config)).collect();
    let mut trace = Vec::with_capacity(grid.len());
    let mut first: Option<(Q, CutDistribution)> = None;
    let mut monotone = true;
    let mut calls = 0;
    for (b, out) in grid.into_iter().zip(outcomes) {
        let (verdict, c) = match out {
            Ok(RoundOutcome::Feasible { distribution, oracle_calls }) => {
                if first.is_none() {
                    first = Some((b.clone(), distribution));
                }
                ("feasible", oracle_calls)
            }
            Ok(RoundOutcome::Infeasible { oracle_calls, .. }) => {
                if first.is_some() {
                    monotone = false;
                }
                ("infeasible", oracle_calls)
            }
            Err(Error::Unresolved { iterations }) => {
                if first.is_some() {
                    monotone = false;
                }
                ("unresolved", iterations)
            }
            Err(e) => return Err(e),
        };
        calls += c;
        trace.push(SweepPoint { budget: b, verdict: verdict.into(), oracle_calls: c });
    }
    let (budget, distribution) =
        first.ok_or_else(|| Error::Infeasible("no distribution exists even at the total edge cost".into()))?;
    Ok(IndFairSolution {
        budget,
        class_factor: config.class_factor(emb),
        distribution,
        trace,
        monotone,
        oracle_calls: calls,
    })
}
