use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::DemographicSpec;
use crate::error::{Error, Result};
use crate::graph::{CutSolution, EdgeId};
use crate::rational::{self, Q};
use crate::tree::RootedTree;

pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

#[derive(Clone, Debug)]
pub struct DpConfig {
    /// Upper bound on the estimated table footprint, in bytes.
    pub memory_budget: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig { memory_budget: DEFAULT_MEMORY_BUDGET }
    }
}

#[derive(Clone, Debug)]
enum Choice {
    Keep(Vec<u32>),
    Cut,
}

#[derive(Clone, Debug)]
struct Entry {
    cost: Q,
    choices: Vec<Choice>,
}

/// Count vector (connected members per group) -> cheapest cut in the subtree.
type Table = BTreeMap<Vec<u32>, Entry>;

/// Exact minimum-cost cut on a tree meeting every group's coverage.
///
/// Tables are keyed by how many members of each group stay connected inside
/// the subtree; keys that already exceed a group's allowance
/// n_h - ⌈f_h n_h⌉ are dropped since counts only grow towards the root.
pub fn demfair_tree_dp(t: &RootedTree, spec: &DemographicSpec, config: &DpConfig) -> Result<CutSolution> {
    spec.validate(t.num_nodes(), t.root(), &|v| t.is_real(v))?;
    let bt = t.binarize();
    let gamma = spec.gamma();
    let caps: Vec<u32> = (0..gamma)
        .map(|h| {
            let n_h = spec.groups[h].members.len();
            let need = rational::ceil_int(&spec.required(h));
            (n_h as i64 - i64::try_from(need).expect("need fits")) as u32
        })
        .collect();

    let states: f64 = caps.iter().map(|&c| f64::from(c) + 1.0).product();
    let entry_bytes = (64 + 4 * gamma) as f64 * 3.0;
    let estimate = states * bt.num_nodes() as f64 * entry_bytes;
    if estimate > config.memory_budget as f64 {
        return Err(Error::Refused(format!(
            "estimated table size {:.0} bytes exceeds the memory budget of {} bytes",
            estimate, config.memory_budget
        )));
    }

    let mut phi: Vec<Vec<u32>> = vec![vec![0; gamma]; bt.num_nodes()];
    for (h, grp) in spec.groups.iter().enumerate() {
        for &v in &grp.members {
            phi[v][h] += 1;
        }
    }

    let mut tables: Vec<Table> = vec![Table::new(); bt.num_nodes()];
    for &v in bt.top_down().iter().rev() {
        let mut cur = Table::new();
        if phi[v].iter().zip(&caps).all(|(k, c)| k <= c) {
            cur.insert(phi[v].clone(), Entry { cost: Q::zero(), choices: Vec::new() });
        }
        for &(c, e) in bt.children(v) {
            let mut options: Vec<(Vec<u32>, Q, Choice)> =
                tables[c].iter().map(|(k, entry)| (k.clone(), entry.cost.clone(), Choice::Keep(k.clone()))).collect();
            if bt.is_cuttable(e) {
                options.push((vec![0; gamma], bt.cost(e).clone(), Choice::Cut));
            }
            let mut next = Table::new();
            for (k1, left) in &cur {
                for (k2, cost, choice) in &options {
                    let key: Vec<u32> = k1.iter().zip(k2).map(|(a, b)| a + b).collect();
                    if key.iter().zip(&caps).any(|(k, c)| k > c) {
                        continue;
                    }
                    let total = &left.cost + cost;
                    if next.get(&key).is_none_or(|old: &Entry| total < old.cost) {
                        let mut choices = left.choices.clone();
                        choices.push(choice.clone());
                        next.insert(key, Entry { cost: total, choices });
                    }
                }
            }
            cur = next;
        }
        tables[v] = cur;
    }

    let root = &tables[bt.root()];
    let (key, _) = root
        .iter()
        .min_by(|a, b| a.1.cost.cmp(&b.1.cost))
        .ok_or_else(|| Error::Infeasible("no cut over cuttable edges meets every group's coverage".into()))?;

    let mut cut: BTreeSet<EdgeId> = BTreeSet::new();
    let mut stack = vec![(bt.root(), key.clone())];
    while let Some((v, k)) = stack.pop() {
        let entry = &tables[v][&k];
        for (&(c, e), choice) in bt.children(v).iter().zip(&entry.choices) {
            match choice {
                Choice::Cut => {
                    cut.insert(e);
                }
                Choice::Keep(ck) => stack.push((c, ck.clone())),
            }
        }
    }
    CutSolution::from_cut(t.graph(), cut)
}
