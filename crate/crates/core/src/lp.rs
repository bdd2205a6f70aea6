//! Exact two-phase simplex over rationals.
//!
//! Problems are `min c·x` subject to linear rows and `x >= 0`. Pivoting uses
//! Dantzig's rule and falls back to Bland's rule once degenerate pivots start
//! repeating, so the method always terminates. Optimal solutions are basic,
//! which bounds the number of nonzero variables by the number of rows.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Q)>,
    pub sense: Sense,
    pub rhs: Q,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<Q>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<Q>,
    pub objective: Q,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, objective: vec![Q::zero(); num_vars], constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_cost(&mut self, var: usize, cost: Q) {
        self.objective[var] = cost;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Q)>, sense: Sense, rhs: Q) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn minimize(&self) -> Result<LpOutcome> {
        Tableau::build(self).solve(&self.objective)
    }

    /// Checks `x` against every row and the sign constraints.
    pub fn is_feasible(&self, x: &[Q]) -> bool {
        x.len() == self.num_vars
            && x.iter().all(|v| !v.is_negative())
            && self.constraints.iter().all(|c| {
                let lhs = c.coeffs.iter().fold(Q::zero(), |acc, (j, a)| acc + a * &x[*j]);
                match c.sense {
                    Sense::Le => lhs <= c.rhs,
                    Sense::Ge => lhs >= c.rhs,
                    Sense::Eq => lhs == c.rhs,
                }
            })
    }
}

const BLAND_AFTER_DEGENERATE: usize = 32;
const MAX_PIVOTS: usize = 1_000_000;

struct Tableau {
    /// rows of [A | b]
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    num_structural: usize,
    /// columns at or past this index are artificial
    first_artificial: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let mut slack_count = 0;
        let mut artificial_count = 0;
        for c in &lp.constraints {
            let flip = c.rhs.is_negative();
            match (c.sense, flip) {
                (Sense::Le, false) | (Sense::Ge, true) => slack_count += 1,
                (Sense::Ge, false) | (Sense::Le, true) => {
                    slack_count += 1;
                    artificial_count += 1
                }
                (Sense::Eq, _) => artificial_count += 1,
            }
        }
        let first_artificial = n + slack_count;
        let width = first_artificial + artificial_count;
        let mut rows = Vec::with_capacity(lp.constraints.len());
        let mut basis = Vec::with_capacity(lp.constraints.len());
        let mut next_slack = n;
        let mut next_art = first_artificial;
        for c in &lp.constraints {
            let mut row = vec![Q::zero(); width + 1];
            let flip = c.rhs.is_negative();
            let sign = if flip { -Q::one() } else { Q::one() };
            for (j, a) in &c.coeffs {
                row[*j] += a * &sign;
            }
            row[width] = &c.rhs * &sign;
            let sense = match (c.sense, flip) {
                (Sense::Eq, _) => Sense::Eq,
                (Sense::Le, false) | (Sense::Ge, true) => Sense::Le,
                _ => Sense::Ge,
            };
            match sense {
                Sense::Le => {
                    row[next_slack] = Q::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Sense::Ge => {
                    row[next_slack] = -Q::one();
                    next_slack += 1;
                    row[next_art] = Q::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Sense::Eq => {
                    row[next_art] = Q::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Tableau { rows, basis, num_structural: n, first_artificial, width }
    }

    fn solve(mut self, objective: &[Q]) -> Result<LpOutcome> {
        if self.first_artificial < self.width {
            let mut phase1 = vec![Q::zero(); self.width];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = Q::one();
            }
            let mut obj = self.reduced_costs(&phase1);
            if !self.optimize(&mut obj, self.width)? {
                return Err(Error::Lp("phase one cannot be unbounded".into()));
            }
            // obj[width] holds minus the phase-one optimum
            if !obj[self.width].is_zero() {
                return Ok(LpOutcome::Infeasible);
            }
            self.evict_artificials();
        }
        let mut costs = vec![Q::zero(); self.width];
        costs[..self.num_structural].clone_from_slice(objective);
        let mut obj = self.reduced_costs(&costs);
        if !self.optimize(&mut obj, self.first_artificial)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![Q::zero(); self.num_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_structural {
                x[b] = self.rows[i][self.width].clone();
            }
        }
        let objective_value = x.iter().zip(objective).fold(Q::zero(), |acc, (a, c)| acc + a * c);
        Ok(LpOutcome::Optimal(LpSolution { x, objective: objective_value }))
    }

    /// Objective row in canonical form: reduced costs plus minus the current value.
    fn reduced_costs(&self, costs: &[Q]) -> Vec<Q> {
        let mut obj: Vec<Q> = costs.to_vec();
        obj.push(Q::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero() {
                    obj[j] -= cb * a;
                }
            }
        }
        obj
    }

    /// Pivots until optimal (returns true) or an unbounded ray is found.
    /// Only columns below `allowed` may enter.
    fn optimize(&mut self, obj: &mut [Q], allowed: usize) -> Result<bool> {
        let mut degenerate_run = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate_run >= BLAND_AFTER_DEGENERATE;
            let entering = if bland {
                (0..allowed).find(|&j| obj[j].is_negative())
            } else {
                (0..allowed).filter(|&j| obj[j].is_negative()).min_by(|&a, &b| obj[a].cmp(&obj[b]).then(a.cmp(&b)))
            };
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &row[self.width] / &row[col];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((row, ratio)) = leave else {
                return Ok(false);
            };
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col, obj);
        }
        Err(Error::Lp("pivot limit reached".into()))
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Q]) {
        let inv = Q::one() / &self.rows[r][c];
        for a in self.rows[r].iter_mut() {
            if !a.is_zero() {
                *a *= &inv;
            }
        }
        let support: Vec<usize> = (0..=self.width).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &support {
                row[j] -= &f * &pivot_row[j];
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for &j in &support {
                obj[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[r] = c;
    }

    /// After a successful phase one, pivots zero-level artificials out of the
    /// basis and drops rows that turn out to be redundant.
    fn evict_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            match (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero()) {
                Some(j) => {
                    let mut scratch = vec![Q::zero(); self.width + 1];
                    self.pivot(i, j, &mut scratch);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}
