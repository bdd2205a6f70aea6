//! Seeded random instances for tests and experiments.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::demfair::{DemographicSpec, Group};
use crate::graph::{VertexId, WeightedGraph};
use crate::rational::{frac, q, Q};
use crate::rng;

#[derive(Clone, Copy, Debug)]
pub enum Weights {
    /// integers in 0..=max
    Integer(i64),
    /// p/q with p in 0..=max_num and q in 1..=max_den
    Rational(i64, i64),
    /// as `Rational` but never zero
    Positive(i64, i64),
}

impl Weights {
    pub fn draw(self, r: &mut ChaCha8Rng) -> Q {
        match self {
            Weights::Integer(max) => q(r.gen_range(0..=max)),
            Weights::Rational(num, den) => frac(r.gen_range(0..=num), r.gen_range(1..=den)),
            Weights::Positive(num, den) => frac(r.gen_range(1..=num), r.gen_range(1..=den)),
        }
    }
}

/// Random recursive tree on 0..n rooted at 0.
pub fn random_tree(n: usize, weights: Weights, seed: u64) -> WeightedGraph {
    let mut r = rng::stream(seed, "random-tree", n as u64);
    let triples: Vec<_> = (1..n).map(|v| (r.gen_range(0..v), v, weights.draw(&mut r))).collect();
    WeightedGraph::from_triples(n, 0, &triples).expect("valid tree")
}

/// Random tree plus every other vertex pair with probability `density`.
pub fn random_connected_graph(n: usize, density: f64, weights: Weights, seed: u64) -> WeightedGraph {
    let mut r = rng::stream(seed, "random-graph", n as u64);
    let mut triples: Vec<_> = (1..n).map(|v| (r.gen_range(0..v), v, weights.draw(&mut r))).collect();
    let present: BTreeSet<(usize, usize)> = triples.iter().map(|&(u, v, _)| (u, v)).collect();
    for u in 0..n {
        for v in u + 1..n {
            if !present.contains(&(u, v)) && r.gen_bool(density) {
                triples.push((u, v, weights.draw(&mut r)));
            }
        }
    }
    WeightedGraph::from_triples(n, 0, &triples).expect("valid graph")
}

/// `gamma` random non-empty groups over the non-source vertices with
/// fractions p/q, q ≤ 4, at least `min_fraction`.
pub fn random_groups(g: &WeightedGraph, gamma: usize, min_fraction: &Q, seed: u64) -> DemographicSpec {
    let mut r = rng::stream(seed, "random-groups", gamma as u64);
    let others: Vec<VertexId> = g.non_source_vertices().collect();
    let groups = (0..gamma)
        .map(|_| {
            let size = r.gen_range(1..=others.len());
            let members: BTreeSet<VertexId> = others.choose_multiple(&mut r, size).copied().collect();
            let fraction = loop {
                let den = r.gen_range(1..=4);
                let f = frac(r.gen_range(1..=den), den);
                if f >= *min_fraction {
                    break f;
                }
            };
            Group { members, fraction }
        })
        .collect();
    DemographicSpec::new(groups)
}

/// One weight drawn from `weights` per non-source vertex.
pub fn random_vertex_weights(g: &WeightedGraph, weights: Weights, seed: u64) -> BTreeMap<VertexId, Q> {
    let mut r = rng::stream(seed, "random-vertex-weights", 0);
    g.non_source_vertices().map(|v| (v, weights.draw(&mut r))).collect()
}

/// Probabilities from {0, 1/4, 1/3, 1/2, 2/3, 3/4, 1}.
pub fn random_probabilities(g: &WeightedGraph, seed: u64) -> BTreeMap<VertexId, Q> {
    let mut r = rng::stream(seed, "random-probabilities", 0);
    let menu = [frac(0, 1), frac(1, 4), frac(1, 3), frac(1, 2), frac(2, 3), frac(3, 4), frac(1, 1)];
    g.non_source_vertices().map(|v| (v, menu.choose(&mut r).unwrap().clone())).collect()
}
