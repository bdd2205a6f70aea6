//! Exhaustive reference solvers over vertex subsets S ⊆ V \ {s}.
//!
//! Any cut F is dominated by δ(prot(F)), so optimizing over boundaries of
//! vertex sets is exact for every problem here.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::auxcut::AuxCutInstance;
use crate::demfair::DemographicSpec;
use crate::error::{Error, Result};
use crate::graph::{CutSolution, VertexId, WeightedGraph};
use crate::indfair::{self, CutDistribution, DualPoint, ProtectionSpec};
use crate::rational::{self, Q};

pub const DEFAULT_MAX_N: usize = 16;
pub const DEFAULT_PLP_MAX_N: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Sbmincc,
    Demfair,
    Auxcut,
    PlpFeasible,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub problem: Problem,
    pub feasible: bool,
    #[serde(with = "rational::serde_q::opt")]
    pub optimum: Option<Q>,
    pub witness_set: Option<BTreeSet<VertexId>>,
    pub witness_cut: Option<CutSolution>,
    pub distribution: Option<CutDistribution>,
    pub certificate: Option<DualPoint>,
    /// number of vertex subsets examined
    pub enumerated: usize,
}

impl OracleReport {
    fn empty(problem: Problem, enumerated: usize) -> Self {
        OracleReport {
            problem,
            feasible: false,
            optimum: None,
            witness_set: None,
            witness_cut: None,
            distribution: None,
            certificate: None,
            enumerated,
        }
    }
}

struct Subsets<'a> {
    g: &'a WeightedGraph,
    others: Vec<VertexId>,
    /// per edge: masks of its endpoints (0 for the source)
    ends: Vec<(u32, u32)>,
}

impl<'a> Subsets<'a> {
    fn new(g: &'a WeightedGraph, max_n: usize) -> Result<Self> {
        let n = g.num_vertices();
        if n > max_n || n > 31 {
            return Err(Error::Refused(format!(
                "oracle enumeration is limited to n <= {max_n}, graph has {n} vertices"
            )));
        }
        let others: Vec<VertexId> = g.non_source_vertices().collect();
        let mut index = vec![0u32; n];
        for (i, &v) in others.iter().enumerate() {
            index[v] = 1 << i;
        }
        let ends = g.edges().iter().map(|e| (index[e.u], index[e.v])).collect();
        Ok(Subsets { g, others, ends })
    }

    fn count(&self) -> usize {
        1 << self.others.len()
    }

    fn set(&self, mask: u32) -> BTreeSet<VertexId> {
        self.others.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &v)| v).collect()
    }

    fn cost(&self, mask: u32) -> Q {
        rational::sum(
            self.ends
                .iter()
                .zip(self.g.edges())
                .filter(|((a, b), _)| (mask & a != 0) != (mask & b != 0))
                .map(|(_, e)| &e.cost),
        )
    }

    /// prot(δ(S)) = S, i.e. every vertex outside S still reaches the source.
    fn is_closed(&self, mask: u32) -> bool {
        let touching: Vec<bool> = self.ends.iter().map(|(a, b)| mask & (a | b) != 0).collect();
        let reach = self.g.reachable_mask(&touching);
        let inside = self.set(mask);
        (0..self.g.num_vertices()).all(|v| inside.contains(&v) || reach[v])
    }

    fn witness(&self, mask: u32) -> Result<(BTreeSet<VertexId>, CutSolution)> {
        let set = self.set(mask);
        let cut = CutSolution::from_cut(self.g, self.g.boundary(&set)?)?;
        Ok((set, cut))
    }

    /// Mask with the least score under `order` among those `score` accepts;
    /// ties go to the smaller mask.
    fn best<K: Send, F, C>(&self, score: F, order: C) -> Option<(u32, K)>
    where
        F: Fn(u32) -> Option<K> + Sync,
        C: Fn(&K, &K) -> Ordering + Sync,
    {
        (0..self.count() as u32).into_par_iter().filter_map(|m| score(m).map(|k| (m, k))).reduce_with(|a, b| {
            match order(&a.1, &b.1).then(a.0.cmp(&b.0)) {
                Ordering::Greater => b,
                _ => a,
            }
        })
    }
}

fn min_cut_report(
    problem: Problem,
    subsets: &Subsets,
    accept: impl Fn(&BTreeSet<VertexId>) -> bool + Sync,
) -> Result<OracleReport> {
    let best = subsets.best(|m| accept(&subsets.set(m)).then(|| subsets.cost(m)), |a, b| a.cmp(b));
    let mut report = OracleReport::empty(problem, subsets.count());
    if let Some((mask, cost)) = best {
        let (set, cut) = subsets.witness(mask)?;
        report.feasible = true;
        report.optimum = Some(cost);
        report.witness_set = Some(set);
        report.witness_cut = Some(cut);
    }
    Ok(report)
}

/// min w(δ(S)) over |S| ≥ T.
pub fn oracle_sbmincc(g: &WeightedGraph, target: usize, max_n: usize) -> Result<OracleReport> {
    let subsets = Subsets::new(g, max_n)?;
    min_cut_report(Problem::Sbmincc, &subsets, |s| s.len() >= target)
}

/// min w(δ(S)) over S meeting every group's coverage.
pub fn oracle_demfair(g: &WeightedGraph, spec: &DemographicSpec, max_n: usize) -> Result<OracleReport> {
    spec.validate_for(g)?;
    let subsets = Subsets::new(g, max_n)?;
    min_cut_report(Problem::Demfair, &subsets, |s| spec.is_satisfied_by(s))
}

/// max a(S) over |S| ≥ T and w(δ(S)) ≤ B; ties prefer the cheaper cut.
pub fn oracle_auxcut(inst: &AuxCutInstance, max_n: usize) -> Result<OracleReport> {
    let subsets = Subsets::new(&inst.graph, max_n)?;
    let best = subsets.best(
        |m| {
            let s = subsets.set(m);
            if s.len() < inst.target {
                return None;
            }
            let cost = subsets.cost(m);
            (cost <= inst.budget).then(|| (inst.value_of(&s), cost))
        },
        |a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)),
    );
    let mut report = OracleReport::empty(Problem::Auxcut, subsets.count());
    if let Some((mask, (value, _))) = best {
        let (set, cut) = subsets.witness(mask)?;
        report.feasible = true;
        report.optimum = Some(value);
        report.witness_set = Some(set);
        report.witness_cut = Some(cut);
    }
    Ok(report)
}

/// Exact PLP(B) over all closed cuts δ(S) with w(δ(S)) ≤ B and |S| ≥ T:
/// a basic distribution when feasible, otherwise a verified certificate
/// (y, μ) with Σ p y = μ + 1 and y(S) ≤ μ on every column.
pub fn oracle_plp_feasible(g: &WeightedGraph, spec: &ProtectionSpec, budget: &Q, max_n: usize) -> Result<OracleReport> {
    let subsets = Subsets::new(g, max_n)?;
    let masks: Vec<u32> = (0..subsets.count() as u32)
        .into_par_iter()
        .filter(|&m| (m.count_ones() as usize) >= spec.target && subsets.cost(m) <= *budget && subsets.is_closed(m))
        .collect();
    let columns: Vec<BTreeSet<VertexId>> = masks.iter().map(|&m| subsets.set(m)).collect();
    let mut report = OracleReport::empty(Problem::PlpFeasible, subsets.count());
    let n = g.num_vertices();

    if columns.is_empty() {
        report.certificate = Some(DualPoint { y: vec![Q::zero(); n], mu: -Q::one() });
        return Ok(report);
    }
    if let Some(x) = indfair::restricted_primal(&columns, &spec.probabilities, g.source())? {
        let mut support = Vec::new();
        let mut probs = Vec::new();
        for (&m, xj) in masks.iter().zip(x) {
            if xj.is_positive() {
                support.push(subsets.witness(m)?.1);
                probs.push(xj);
            }
        }
        report.feasible = true;
        report.distribution = Some(CutDistribution::new(support, probs, n));
        return Ok(report);
    }
    let cert = indfair::restricted_dual(&columns, &spec.probabilities, g.source())?;
    let sound = cert.margin(&spec.probabilities) == Q::one()
        && cert.y.iter().all(|y| !y.is_negative())
        && columns.iter().all(|c| cert.weight_of(c) <= cert.mu);
    if !sound {
        return Err(Error::Lp("infeasibility certificate failed verification".into()));
    }
    report.certificate = Some(cert);
    Ok(report)
}

/// Smallest budget among `grid` (ascending) at which PLP is feasible.
pub fn plp_threshold(g: &WeightedGraph, spec: &ProtectionSpec, grid: &[Q], max_n: usize) -> Result<Option<Q>> {
    for b in grid {
        if oracle_plp_feasible(g, spec, b, max_n)?.feasible {
            return Ok(Some(b.clone()));
        }
    }
    Ok(None)
}

impl OracleReport {
    /// Re-derives the witness cut from the graph.
    pub fn verify_witness(&self, g: &WeightedGraph) -> Result<()> {
        if let (Some(set), Some(cut)) = (&self.witness_set, &self.witness_cut) {
            cut.verify(g)?;
            if !set.is_subset(&cut.protected) || g.boundary(set)? != cut.cut_edges {
                return Err(Error::Input("witness cut is not the boundary of the witness set".into()));
            }
        }
        if let Some(d) = &self.distribution {
            if rational::sum(&d.probabilities) != Q::one() {
                return Err(Error::Input("distribution does not sum to one".into()));
            }
            for cut in &d.support {
                cut.verify(g)?;
            }
        }
        if self.feasible && self.optimum.is_none() && self.distribution.is_none() {
            return Err(Error::Input("feasible report without a witness".into()));
        }
        if !self.feasible && self.problem == Problem::PlpFeasible && self.certificate.is_none() {
            return Err(Error::Input("infeasible report without a certificate".into()));
        }
        Ok(())
    }
}
