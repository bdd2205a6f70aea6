use std::collections::{BTreeMap, BTreeSet};

use faircut::auxcut::{self, AuxCutInstance};
use faircut::demfair::{self, DemographicSpec, DpConfig};
use faircut::embed::{self, EmbedConfig};
use faircut::indfair::{self, CutDistribution, IndFairConfig, ProtectionSpec};
use faircut::instances::{self, Weights};
use faircut::oracle::{self, DEFAULT_MAX_N};
use faircut::rational::{frac, q, Q};
use faircut::{rng, CutSolution, RootedTree, WeightedGraph};
use proptest::prelude::*;

fn subset_of(bits: u64, len: usize) -> BTreeSet<usize> {
    (0..len).filter(|i| bits & (1 << i) != 0).collect()
}

/// Cheapest cuttable edge set protecting every real node of `r`, by brute force.
fn min_isolation(t: &RootedTree, r: &BTreeSet<usize>) -> Option<Q> {
    let cuttable: Vec<usize> = (0..t.graph().num_edges()).filter(|&e| t.is_cuttable(e)).collect();
    (0u64..1 << cuttable.len())
        .filter_map(|bits| {
            let cut: BTreeSet<usize> = subset_of(bits, cuttable.len()).into_iter().map(|i| cuttable[i]).collect();
            let prot = t.graph().protected_set(&cut).unwrap();
            r.is_subset(&prot).then(|| t.graph().cost_of(&cut))
        })
        .min()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn protection_grows_with_the_cut(n in 2usize..9, seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let g = instances::random_connected_graph(n, 0.4, Weights::Rational(5, 2), seed);
        let m = g.num_edges();
        let small = subset_of(a & b, m);
        let large = subset_of(a, m);
        prop_assert!(g.protected_set(&small).unwrap().is_subset(&g.protected_set(&large).unwrap()));
    }

    #[test]
    fn boundaries_dominate(n in 2usize..9, seed in any::<u64>()) {
        let g = instances::random_connected_graph(n, 0.4, Weights::Rational(5, 2), seed);
        let m = g.num_edges().min(14);
        for bits in 0u64..1 << m {
            let f = subset_of(bits, m);
            let s = g.protected_set(&f).unwrap();
            let d = g.boundary(&s).unwrap();
            prop_assert!(s.is_subset(&g.protected_set(&d).unwrap()));
            prop_assert!(g.cost_of(&d) <= g.cost_of(&f));
        }
    }

    #[test]
    fn binarize_keeps_separation_costs(n in 2usize..11, seed in any::<u64>()) {
        // stars and brooms have high degree
        let mut r = rng::stream(seed, "shape", 0);
        let triples: Vec<_> = (1..n)
            .map(|v| (if rand::Rng::gen_bool(&mut r, 0.6) { 0 } else { rand::Rng::gen_range(&mut r, 0..v) }, v,
                      q(rand::Rng::gen_range(&mut r, 0..5))))
            .collect();
        let g = WeightedGraph::from_triples(n, 0, &triples).unwrap();
        let cuttable: Vec<bool> = (0..n - 1).map(|_| rand::Rng::gen_bool(&mut r, 0.8)).collect();
        let t = RootedTree::new(g, vec![true; n], cuttable).unwrap();
        let bt = t.binarize();
        prop_assert!(bt.top_down().iter().all(|&v| bt.children(v).len() <= 2));
        for bits in 0u64..1 << (n - 1) {
            let set: BTreeSet<usize> = subset_of(bits, n - 1).into_iter().map(|i| i + 1).collect();
            prop_assert_eq!(min_isolation(&t, &set), min_isolation(&bt, &set));
        }
    }

    #[test]
    fn merged_sources_protect_the_same_vertices(n in 3usize..9, seed in any::<u64>(), pick in any::<u64>(), cutbits in any::<u64>()) {
        let g = instances::random_connected_graph(n, 0.4, Weights::Rational(5, 2), seed);
        let mut sources = subset_of(pick, n);
        sources.insert(0);
        let merged = g.merge_sources(&sources).unwrap();
        let cut_new = subset_of(cutbits, merged.graph.num_edges());
        let prot_new = merged.graph.protected_set(&cut_new).unwrap();
        // original: unreachable from every source with the mapped edges removed
        let cut_old: BTreeSet<usize> = cut_new.iter().map(|&e| merged.edge_map[e]).collect();
        let mut removed = vec![false; g.num_edges()];
        for &e in &cut_old {
            removed[e] = true;
        }
        let mut reached = vec![false; n];
        for &s in &sources {
            let h = WeightedGraph::new(n, g.edges().to_vec(), s).unwrap();
            for (v, r) in h.reachable_mask(&removed).into_iter().enumerate() {
                reached[v] |= r;
            }
        }
        let prot_old: BTreeSet<usize> = (0..n).filter(|&v| !reached[v]).map(|v| merged.vertex_map[v]).collect();
        prop_assert_eq!(prot_old, prot_new);
    }

    #[test]
    fn tree_dp_is_exact_and_dominates_lp(n in 2usize..11, gamma in 1usize..3, seed in any::<u64>()) {
        let g = instances::random_tree(n, Weights::Rational(6, 3), seed);
        let spec = instances::random_groups(&g, gamma, &frac(1, 4), seed);
        let t = RootedTree::from_graph(g.clone()).unwrap();
        let dp = demfair::demfair_tree_dp(&t, &spec, &DpConfig::default()).unwrap();
        let opt = oracle::oracle_demfair(&g, &spec, DEFAULT_MAX_N).unwrap();
        prop_assert_eq!(Some(dp.cost.clone()), opt.optimum);
        prop_assert!(spec.is_satisfied_by(&dp.protected));
        let lp = demfair::demfair_lp_solve(&t, &spec).unwrap();
        prop_assert!(lp.objective <= dp.cost);
        prop_assert!(lp.is_feasible(&t, &spec));
    }

    #[test]
    fn rounding_keeps_one_cut_per_path(n in 2usize..12, seed in any::<u64>()) {
        let g = instances::random_tree(n, Weights::Rational(6, 3), seed);
        let spec = instances::random_groups(&g, 2, &frac(1, 2), seed);
        let t = RootedTree::from_graph(g).unwrap();
        let lp = demfair::demfair_lp_solve(&t, &spec).unwrap();
        let mut r = rng::stream(seed, "paths", 0);
        for _ in 0..50 {
            let cut = demfair::round_once(&t, &lp, &mut r);
            for v in 0..n {
                let on_path = t.root_path(v).unwrap().iter().filter(|e| cut.cut_edges.contains(e)).count();
                prop_assert!(on_path <= 1);
            }
        }
    }

    #[test]
    fn auxcut_value_grows_with_budget(n in 2usize..9, seed in any::<u64>(), target in 0usize..4) {
        let g = instances::random_tree(n, Weights::Integer(4), seed);
        let target = target.min(n - 1);
        let a = instances::random_vertex_weights(&g, Weights::Rational(5, 2), seed);
        let total: i64 = faircut::rational::floor_int(&g.total_cost()).try_into().unwrap();
        let mut last: Option<Q> = None;
        for b in 0..=total {
            let inst = AuxCutInstance::new(g.clone(), q(b), target, &a).unwrap();
            match auxcut::auxcut_tree(&inst, &auxcut::integral_exact_epsilon(&inst.budget)) {
                Ok(sol) => {
                    prop_assert!(sol.cut.cost <= q(b));
                    prop_assert!(sol.cut.protected.len() >= target);
                    if let Some(prev) = &last {
                        prop_assert!(sol.value >= *prev);
                    }
                    last = Some(sol.value);
                }
                Err(e) => {
                    prop_assert!(e.is_infeasible());
                    prop_assert!(last.is_none());
                }
            }
        }
    }

    #[test]
    fn wrappers_respect_their_factors(n in 3usize..8, seed in any::<u64>(), frac_b in 0i64..5) {
        let g = instances::random_connected_graph(n, 0.4, Weights::Positive(6, 2), seed);
        let emb = embed::build_embedding(&g, &EmbedConfig { seed, ..EmbedConfig::default() }).unwrap();
        for t in &emb.trees {
            // mapped cuts never cost more than the tree cut they come from
            for e in 0..t.graph().num_edges() {
                let tc = CutSolution::from_cut(t.graph(), [e].into_iter().collect()).unwrap();
                prop_assert!(embed::tree_cut_to_graph_cut(&g, t, &tc).unwrap().cost <= tc.cost);
            }
        }
        let budget = g.total_cost() * frac(frac_b, 4);
        let a = instances::random_vertex_weights(&g, Weights::Rational(4, 2), seed);
        let inst = AuxCutInstance::new(g.clone(), budget.clone(), 1, &a).unwrap();
        let eps = frac(1, 8);
        let opt = oracle::oracle_auxcut(&inst, DEFAULT_MAX_N).unwrap();
        match auxcut::auxcut_general(&inst, &emb, &eps) {
            Ok(out) => {
                prop_assert!(out.solution.cut.cost <= (Q::from_integer(1.into()) + &eps) * &emb.certified_stretch * &budget);
                if let Some(v) = opt.optimum {
                    prop_assert!(out.solution.value >= v);
                }
            }
            Err(e) => {
                prop_assert!(e.is_infeasible());
                prop_assert!(!opt.feasible);
            }
        }
    }

    #[test]
    fn sbmincc_matches_single_group_oracle(n in 2usize..9, seed in any::<u64>(), t in 1usize..8) {
        let g = instances::random_connected_graph(n, 0.4, Weights::Rational(5, 2), seed);
        let t = t.min(n - 1);
        let a = oracle::oracle_sbmincc(&g, t, DEFAULT_MAX_N).unwrap();
        let b = oracle::oracle_demfair(&g, &DemographicSpec::single_group(&g, t).unwrap(), DEFAULT_MAX_N).unwrap();
        prop_assert_eq!(&a.optimum, &b.optimum);
        a.verify_witness(&g).unwrap();
        let zero = AuxCutInstance::new(g.clone(), a.optimum.clone().unwrap(), t, &BTreeMap::new()).unwrap();
        prop_assert!(oracle::oracle_auxcut(&zero, DEFAULT_MAX_N).unwrap().feasible);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn infeasible_verdicts_are_confirmed(n in 3usize..7, seed in any::<u64>(), target in 0usize..6) {
        let g = instances::random_connected_graph(n, 0.4, Weights::Positive(4, 2), seed);
        let emb = embed::build_embedding(&g, &EmbedConfig { seed, ..EmbedConfig::default() }).unwrap();
        let spec = ProtectionSpec::new(&g, target.min(n - 1), &instances::random_probabilities(&g, seed)).unwrap();
        let cfg = IndFairConfig::new(frac(1, 4));
        for b in indfair::budget_grid(&g, &cfg.epsilon) {
            match indfair::feasibility_round(&g, &spec, &b, &emb, &cfg).unwrap() {
                indfair::RoundOutcome::Feasible { distribution, .. } => {
                    distribution.verify(&g, &(cfg.class_factor(&emb) * &b), spec.target).unwrap();
                    prop_assert!(distribution.support.len() <= n);
                    for v in 0..n {
                        prop_assert!(distribution.marginals[v] >= spec.probabilities[v]);
                    }
                    let again = CutDistribution::new(distribution.support.clone(), distribution.probabilities.clone(), n);
                    prop_assert_eq!(again.marginals, distribution.marginals);
                }
                indfair::RoundOutcome::Infeasible { .. } => {
                    prop_assert!(!oracle::oracle_plp_feasible(&g, &spec, &b, 10).unwrap().feasible);
                }
            }
        }
    }
}
