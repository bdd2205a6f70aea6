//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! writes a JSON artifact per criterion under the cargo tmp dir.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use faircut::auxcut::{self, AuxCutInstance};
use faircut::demfair::{self, DemographicSpec, DpConfig, FractionalCut, LpRoundConfig, Method};
use faircut::embed::{self, CertificationMode, EmbedConfig};
use faircut::indfair::{self, IndFairConfig, ProtectionSpec};
use faircut::instances::{self, Weights};
use faircut::oracle;
use faircut::rational::{self, frac, q, Q};
use faircut::{rng, RootedTree};
use num_traits::{One, Zero};
use serde_json::{json, Value};

struct Outcome {
    pass: bool,
    detail: String,
    artifact: Value,
}

fn fmt(x: &Q) -> String {
    rational::format(x)
}

fn seeded(base: u64, i: usize) -> u64 {
    rng::derive_seed(base, "acceptance", i as u64)
}

fn within(x: &Q, bound: &Q) -> bool {
    x <= bound
}

/// Tree DP for demographic cuts equals the brute-force optimum.
fn c1() -> Outcome {
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for i in 0..200 {
        let s = seeded(1, i);
        let n = 2 + i % 11;
        let g = instances::random_tree(n, Weights::Rational(8, 4), s);
        let gamma = 1 + i % 2;
        let spec = instances::random_groups(&g, gamma, &frac(1, 4), s);
        let t = RootedTree::from_graph(g.clone()).unwrap();
        let dp = demfair::demfair_tree_dp(&t, &spec, &DpConfig::default()).unwrap();
        let opt = oracle::oracle_demfair(&g, &spec, oracle::DEFAULT_MAX_N).unwrap();
        let ok = Some(&dp.cost) == opt.optimum.as_ref() && spec.is_satisfied_by(&dp.protected);
        if !ok {
            failures.push(i);
        }
        rows.push(json!({"instance": i, "n": n, "gamma": gamma, "dp": fmt(&dp.cost), "oracle": opt.optimum.as_ref().map(fmt)}));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("200 trees, {} mismatches", failures.len()),
        artifact: json!({"instances": rows, "mismatches": failures}),
    }
}

/// AuxCut tree DP with integer weights equals the brute-force optimum.
fn c2() -> Outcome {
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for i in 0..200 {
        let s = seeded(2, i);
        let n = 2 + i % 11;
        let g = instances::random_tree(n, Weights::Integer(6), s);
        let mut r = rng::stream(s, "c2", 0);
        let total: i64 = rational::floor_int(&g.total_cost()).try_into().unwrap();
        let budget = q(rand::Rng::gen_range(&mut r, 0..=total));
        let target = rand::Rng::gen_range(&mut r, 0..n);
        let a = instances::random_vertex_weights(&g, Weights::Rational(6, 3), s);
        let inst = AuxCutInstance::new(g.clone(), budget.clone(), target, &a).unwrap();
        let got = auxcut::auxcut_tree(&inst, &auxcut::integral_exact_epsilon(&budget));
        let opt = oracle::oracle_auxcut(&inst, oracle::DEFAULT_MAX_N).unwrap();
        let ok = match (&got, &opt.optimum) {
            (Ok(sol), Some(v)) => sol.value == *v && sol.cut.cost <= budget && sol.cut.protected.len() >= target,
            (Err(e), None) => e.is_infeasible(),
            _ => false,
        };
        if !ok {
            failures.push(i);
        }
        rows.push(json!({
            "instance": i, "budget": fmt(&budget), "target": target,
            "value": got.as_ref().ok().map(|s| fmt(&s.value)),
            "oracle": opt.optimum.as_ref().map(fmt),
        }));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("200 trees, {} mismatches", failures.len()),
        artifact: json!({"instances": rows, "mismatches": failures}),
    }
}

/// Discretized AuxCut with rational weights keeps within (1+ε)B and reaches OPT.
fn c3() -> Outcome {
    let eps = frac(1, 4);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for i in 0..100 {
        let s = seeded(3, i);
        let n = 3 + i % 10;
        let g = instances::random_tree(n, Weights::Positive(9, 4), s);
        let mut r = rng::stream(s, "c3", 0);
        let budget = g.total_cost() * frac(rand::Rng::gen_range(&mut r, 1..=8), 8);
        let target = rand::Rng::gen_range(&mut r, 0..n);
        let a = instances::random_vertex_weights(&g, Weights::Rational(6, 3), s);
        let inst = AuxCutInstance::new(g.clone(), budget.clone(), target, &a).unwrap();
        let got = auxcut::auxcut_tree(&inst, &eps);
        let opt = oracle::oracle_auxcut(&inst, oracle::DEFAULT_MAX_N).unwrap();
        let cap = (Q::one() + &eps) * &budget;
        let ok = match (&got, &opt.optimum) {
            (Ok(sol), Some(v)) => sol.value >= *v && within(&sol.cut.cost, &cap) && sol.cut.protected.len() >= target,
            (Ok(sol), None) => within(&sol.cut.cost, &cap) && sol.cut.protected.len() >= target,
            (Err(e), None) => e.is_infeasible(),
            (Err(_), Some(_)) => false,
        };
        if !ok {
            failures.push(i);
        }
        rows.push(json!({
            "instance": i, "budget": fmt(&budget), "target": target,
            "cost": got.as_ref().ok().map(|s| fmt(&s.cut.cost)),
            "value": got.as_ref().ok().map(|s| fmt(&s.value)),
            "oracle": opt.optimum.as_ref().map(fmt),
        }));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("100 instances, {} violations", failures.len()),
        artifact: json!({"instances": rows, "violations": failures}),
    }
}

/// Empirical marginals of dependent rounding on a fixed 10-edge tree.
fn c4() -> Outcome {
    let parents = [None, Some(0), Some(0), Some(0), Some(1), Some(1), Some(2), Some(3), Some(4), Some(6), Some(7)];
    let n = parents.len();
    let costs = vec![q(1); n];
    let t = RootedTree::from_parents(0, &parents, &costs, vec![true; n], &vec![true; n]).unwrap();
    // edge ids follow child order, so edge v-1 leads to node v
    let x = vec![
        frac(1, 5),
        frac(1, 2),
        frac(0, 1),
        frac(3, 10),
        frac(4, 5),
        frac(1, 4),
        frac(1, 3),
        frac(1, 2),
        frac(1, 4),
        frac(2, 3),
    ];
    let fc = FractionalCut::from_x(&t, x).unwrap();
    let trials = 10_000usize;
    let mut edge_hits = vec![0usize; n - 1];
    let mut vertex_hits = vec![0usize; n];
    let mut path_violations = 0;
    let leaves: Vec<usize> = (0..n).filter(|&v| t.children(v).is_empty()).collect();
    for j in 0..trials {
        let cut = demfair::round_once(&t, &fc, &mut rng::stream(4, "c4", j as u64));
        for &e in &cut.cut_edges {
            edge_hits[e] += 1;
        }
        for &v in &cut.protected {
            vertex_hits[v] += 1;
        }
        for &leaf in &leaves {
            let on_path = t.root_path(leaf).unwrap().iter().filter(|e| cut.cut_edges.contains(e)).count();
            if on_path > 1 {
                path_violations += 1;
            }
        }
    }
    let check = |hits: usize, p: &Q| {
        let p = rational::to_f64(p);
        let emp = hits as f64 / trials as f64;
        let tol = 4.0 * (p * (1.0 - p) / trials as f64).sqrt();
        ((emp - p).abs() <= tol + 1e-12, emp, p)
    };
    let mut bad = Vec::new();
    let mut rows = Vec::new();
    for (e, h) in edge_hits.iter().enumerate() {
        let (ok, emp, p) = check(*h, &fc.x[e]);
        if !ok {
            bad.push(format!("edge {e}"));
        }
        rows.push(json!({"edge": e, "lp": p, "hits": h, "empirical": emp}));
    }
    for (v, h) in vertex_hits.iter().enumerate() {
        let (ok, emp, p) = check(*h, &fc.y[v]);
        if !ok {
            bad.push(format!("vertex {v}"));
        }
        rows.push(json!({"vertex": v, "lp": p, "hits": h, "empirical": emp}));
    }
    Outcome {
        pass: bad.is_empty() && path_violations == 0,
        detail: format!("{trials} runs, {} marginals off, {path_violations} path violations", bad.len()),
        artifact: json!({"marginals": rows, "off": bad, "path_violations": path_violations}),
    }
}

/// Repeated rounding meets (1-ε) coverage within the cost bound.
fn c5() -> Outcome {
    let eps = frac(1, 4);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for i in 0..50 {
        let s = seeded(5, i);
        let n = 6 + i % 7;
        let g = instances::random_tree(n, Weights::Rational(8, 4), s);
        let gamma = 1 + i % 8;
        let spec = instances::random_groups(&g, gamma, &frac(1, 2), s);
        let t = RootedTree::from_graph(g).unwrap();
        let out = demfair::demfair_lp_round(&t, &spec, &LpRoundConfig::new(eps.clone(), s));
        let ok = match &out {
            Ok(r) => {
                spec.satisfied_with_slack(&r.cut.protected, &(Q::one() - &eps))
                    && r.cut.cost <= q(4) * rational::from_usize(r.repetitions) * &r.lp_objective
                    && r.attempts <= demfair::RETRY_CAP
            }
            Err(_) => false,
        };
        if !ok {
            failures.push(i);
        }
        rows.push(match &out {
            Ok(r) => json!({
                "instance": i, "gamma": gamma, "repetitions": r.repetitions, "attempts": r.attempts,
                "lp": fmt(&r.lp_objective), "cost": fmt(&r.cut.cost),
            }),
            Err(e) => json!({"instance": i, "gamma": gamma, "error": e.to_string()}),
        });
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("50 instances, {} failures", failures.len()),
        artifact: json!({"instances": rows, "failures": failures}),
    }
}

fn exhaustive() -> CertificationMode {
    CertificationMode::Exhaustive { max_n: embed::DEFAULT_EXHAUSTIVE_BOUND }
}

/// Exhaustive embedding certification on random graphs; identity on trees.
fn c6() -> Outcome {
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for i in 0..100 {
        let s = seeded(6, i);
        let n = 3 + i % 8;
        let g = instances::random_connected_graph(n, 0.2 + 0.1 * (i % 5) as f64, Weights::Positive(8, 3), s);
        let emb = embed::build_embedding(&g, &EmbedConfig { seed: s, ..EmbedConfig::default() }).unwrap();
        let report = embed::certify(&g, &emb, exhaustive()).unwrap();
        let ok = report.property1_violations == 0
            && report.unbounded_subsets == 0
            && report.stretch == emb.certified_stretch;
        if !ok {
            failures.push(i);
        }
        rows.push(
            json!({"instance": i, "n": n, "m": g.num_edges(), "trees": emb.len(), "stretch": fmt(&report.stretch)}),
        );
    }
    let mut tree_failures = 0;
    for i in 0..20 {
        let g = instances::random_tree(3 + i % 8, Weights::Rational(8, 3), seeded(60, i));
        let emb = embed::build_embedding(&g, &EmbedConfig::default()).unwrap();
        let report = embed::certify(&g, &emb, exhaustive()).unwrap();
        if emb.len() != 1 || emb.certified_stretch != q(1) || report.stretch > q(1) || report.property1_violations != 0
        {
            tree_failures += 1;
        }
    }
    let stretches: Vec<f64> =
        rows.iter().map(|r| rational::to_f64(&rational::parse(r["stretch"].as_str().unwrap()).unwrap())).collect();
    let max = stretches.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: failures.is_empty() && tree_failures == 0,
        detail: format!(
            "100 graphs, {} certification failures, max C_embed {:.3}; 20 trees, {} not identity",
            failures.len(),
            max,
            tree_failures
        ),
        artifact: json!({"graphs": rows, "failures": failures, "tree_failures": tree_failures}),
    }
}

fn quantiles(mut v: Vec<f64>) -> Value {
    if v.is_empty() {
        return json!(null);
    }
    v.sort_by(f64::total_cmp);
    let at = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    json!({"min": at(0.0), "median": at(0.5), "p90": at(0.9), "max": at(1.0), "count": v.len()})
}

/// General-graph wrappers against the oracles.
fn c7() -> Outcome {
    let eps = frac(1, 4);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut dem_ratios = Vec::new();
    let mut aux_ratios = Vec::new();
    for i in 0..100 {
        let s = seeded(7, i);
        let n = 3 + i % 6;
        let g = instances::random_connected_graph(n, 0.35, Weights::Positive(8, 3), s);
        let emb = embed::build_embedding(&g, &EmbedConfig { seed: s, ..EmbedConfig::default() }).unwrap();
        let c = emb.certified_stretch.clone();

        let spec = instances::random_groups(&g, 1 + i % 2, &frac(1, 4), s);
        let dem = demfair::demfair_general(&g, &spec, &Method::Dp(DpConfig::default()), &emb).unwrap();
        let dem_opt = oracle::oracle_demfair(&g, &spec, oracle::DEFAULT_MAX_N).unwrap().optimum.unwrap();
        let dem_ok = spec.is_satisfied_by(&dem.cut.protected) && dem.cut.cost <= &c * &dem_opt;
        if dem_opt > Q::zero() {
            dem_ratios.push(rational::to_f64(&(&dem.cut.cost / &dem_opt)));
        }

        let mut r = rng::stream(s, "c7", 0);
        let budget = g.total_cost() * frac(rand::Rng::gen_range(&mut r, 0..=6), 6);
        let target = rand::Rng::gen_range(&mut r, 0..n);
        let a = instances::random_vertex_weights(&g, Weights::Rational(6, 3), s);
        let inst = AuxCutInstance::new(g.clone(), budget.clone(), target, &a).unwrap();
        let aux = auxcut::auxcut_general(&inst, &emb, &eps);
        let aux_opt = oracle::oracle_auxcut(&inst, oracle::DEFAULT_MAX_N).unwrap();
        let cap = (Q::one() + &eps) * &c * &budget;
        let aux_ok = match (&aux, &aux_opt.optimum) {
            (Ok(sol), opt) => {
                let sol = &sol.solution;
                opt.as_ref().is_none_or(|v| sol.value >= *v) && sol.cut.protected.len() >= target && sol.cut.cost <= cap
            }
            (Err(e), None) => e.is_infeasible(),
            (Err(_), Some(_)) => false,
        };
        if let Ok(sol) = &aux {
            if budget > Q::zero() {
                aux_ratios.push(rational::to_f64(&(&sol.solution.cut.cost / &budget)));
            }
        }
        if !(dem_ok && aux_ok) {
            failures.push(i);
        }
        rows.push(json!({
            "instance": i, "n": n, "stretch": fmt(&c),
            "demfair": {"cost": fmt(&dem.cut.cost), "oracle": fmt(&dem_opt)},
            "auxcut": {
                "budget": fmt(&budget), "target": target,
                "value": aux.as_ref().ok().map(|s| fmt(&s.solution.value)),
                "cost": aux.as_ref().ok().map(|s| fmt(&s.solution.cut.cost)),
                "oracle": aux_opt.optimum.as_ref().map(fmt),
            },
        }));
    }
    let report =
        json!({"demfair_cost_over_opt": quantiles(dem_ratios), "auxcut_cost_over_budget": quantiles(aux_ratios)});
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "100 graphs, {} violations; demfair cost/OPT median {}, max {}",
            failures.len(),
            report["demfair_cost_over_opt"]["median"],
            report["demfair_cost_over_opt"]["max"]
        ),
        artifact: json!({"instances": rows, "violations": failures, "ratios": report}),
    }
}

/// IndFairCut end to end against the exact PLP oracle.
fn c8() -> Outcome {
    let eps = frac(1, 4);
    let cfg = IndFairConfig::new(eps.clone());
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut infeasible_checked = 0;
    for i in 0..50 {
        let s = seeded(8, i);
        let n = 3 + i % 6;
        let g = instances::random_connected_graph(n, 0.3, Weights::Positive(6, 2), s);
        let emb = embed::build_embedding(&g, &EmbedConfig { seed: s, ..EmbedConfig::default() }).unwrap();
        let mut r = rng::stream(s, "c8", 0);
        let target = rand::Rng::gen_range(&mut r, 0..n);
        let p = instances::random_probabilities(&g, s);
        let spec = ProtectionSpec::new(&g, target, &p).unwrap();
        let sol = indfair::indfair_solve(&g, &spec, &emb, &cfg);
        let grid = indfair::budget_grid(&g, &eps);
        let threshold = oracle::plp_threshold(&g, &spec, &grid, oracle::DEFAULT_PLP_MAX_N).unwrap();
        let mut problems: Vec<String> = Vec::new();
        match &sol {
            Ok(sol) => {
                let d = &sol.distribution;
                if d.support.len() > n {
                    problems.push("support exceeds n".into());
                }
                if d.verify(&g, &(&sol.class_factor * &sol.budget), target).is_err() {
                    problems.push("distribution failed verification".into());
                }
                if (0..n).any(|v| d.marginals[v] < spec.probabilities[v]) {
                    problems.push("marginal below p".into());
                }
                for point in &sol.trace {
                    if point.verdict == "unresolved" {
                        problems.push("unresolved budget".into());
                    }
                    if point.verdict == "infeasible" {
                        infeasible_checked += 1;
                        let o =
                            oracle::oracle_plp_feasible(&g, &spec, &point.budget, oracle::DEFAULT_PLP_MAX_N).unwrap();
                        if o.feasible {
                            problems.push(format!("INFEASIBLE at {} but the oracle is feasible", fmt(&point.budget)));
                        }
                    }
                }
                match &threshold {
                    Some(th) if sol.budget <= (Q::one() + &eps) * th => {}
                    _ => problems.push("B_final above (1+ε)·threshold".into()),
                }
            }
            Err(e) => problems.push(format!("solver error: {e}")),
        }
        if !problems.is_empty() {
            failures.push(json!({"instance": i, "problems": problems}));
        }
        rows.push(json!({
            "instance": i, "n": n, "target": target,
            "budget": sol.as_ref().ok().map(|s| fmt(&s.budget)),
            "threshold": threshold.as_ref().map(fmt),
            "support": sol.as_ref().ok().map(|s| s.distribution.support.len()),
            "oracle_calls": sol.as_ref().ok().map(|s| s.oracle_calls),
            "monotone": sol.as_ref().ok().map(|s| s.monotone),
        }));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "50 instances, {} failures, {infeasible_checked} INFEASIBLE verdicts confirmed",
            failures.len()
        ),
        artifact: json!({"instances": rows, "failures": failures}),
    }
}

/// SB-MinCC through both special-case routes.
fn c9() -> Outcome {
    let eps = frac(1, 4);
    let cfg = IndFairConfig::new(eps.clone());
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for i in 0..100 {
        let s = seeded(9, i);
        let n = 3 + i % 6;
        let g = instances::random_connected_graph(n, 0.3, Weights::Positive(6, 2), s);
        let emb = embed::build_embedding(&g, &EmbedConfig { seed: s, ..EmbedConfig::default() }).unwrap();
        let mut r = rng::stream(s, "c9", 0);
        let target = rand::Rng::gen_range(&mut r, 1..n);
        let opt = oracle::oracle_sbmincc(&g, target, oracle::DEFAULT_MAX_N).unwrap().optimum.unwrap();
        let c = emb.certified_stretch.clone();

        let spec = DemographicSpec::single_group(&g, target).unwrap();
        let dem = demfair::demfair_general(&g, &spec, &Method::Dp(DpConfig::default()), &emb).unwrap();
        let dem_ok = dem.cut.protected.len() >= target && dem.cut.cost <= &c * &opt;

        let zero = ProtectionSpec::new(&g, target, &BTreeMap::new()).unwrap();
        let ind = indfair::indfair_solve(&g, &zero, &emb, &cfg);
        let ind_ok = match &ind {
            Ok(sol) => {
                let factor = (Q::one() + &eps) * &sol.class_factor;
                sol.budget <= (Q::one() + &eps) * &opt
                    && sol.distribution.support.iter().all(|f| f.protected.len() >= target && f.cost <= &factor * &opt)
            }
            Err(_) => false,
        };
        if !(dem_ok && ind_ok) {
            failures.push(i);
        }
        rows.push(json!({
            "instance": i, "n": n, "target": target, "oracle": fmt(&opt), "stretch": fmt(&c),
            "demfair_cost": fmt(&dem.cut.cost),
            "indfair_budget": ind.as_ref().ok().map(|s| fmt(&s.budget)),
            "indfair_costs": ind.as_ref().ok().map(|s| s.distribution.support.iter().map(|f| fmt(&f.cost)).collect::<Vec<_>>()),
        }));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("100 instances, {} violations", failures.len()),
        artifact: json!({"instances": rows, "violations": failures}),
    }
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);

fn criteria() -> Vec<Criterion> {
    vec![
        (1, "demographic tree DP exactness", c1, Some(Duration::from_secs(60))),
        (2, "AuxCut tree DP exactness", c2, None),
        (3, "discretization slack", c3, None),
        (4, "rounding marginals", c4, None),
        (5, "coverage amplification", c5, None),
        (6, "embedding certification", c6, None),
        (7, "general-graph bicriteria", c7, None),
        (8, "individually fair end to end", c8, Some(Duration::from_secs(600))),
        (9, "special-case consistency", c9, None),
    ]
}

fn artifact_dir(run: usize) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(format!("run{run}"));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn main() {
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut all_pass = true;
    let mut line = |id: usize, name: &str, pass: bool, detail: &str| {
        all_pass &= pass;
        println!("criterion {id:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    let mut first_run = BTreeMap::new();
    for (id, name, run, limit) in criteria() {
        if filter.is_some_and(|f| f != id && f != 10) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let bytes = serde_json::to_vec_pretty(&out.artifact).unwrap();
        fs::write(artifact_dir(1).join(format!("criterion{id}.json")), &bytes).unwrap();
        first_run.insert(id, bytes);
        let timing = match limit {
            Some(l) => format!(", {:.1}s of {}s allowed", elapsed.as_secs_f64(), l.as_secs()),
            None => format!(", {:.1}s", elapsed.as_secs_f64()),
        };
        line(id, name, out.pass && in_time, &format!("{}{timing}", out.detail));
    }

    if filter.is_none_or(|f| f == 10) {
        let mut differing = Vec::new();
        for (id, _, run, _) in criteria() {
            let Some(before) = first_run.get(&id) else { continue };
            let bytes = serde_json::to_vec_pretty(&run().artifact).unwrap();
            fs::write(artifact_dir(2).join(format!("criterion{id}.json")), &bytes).unwrap();
            if &bytes != before {
                differing.push(id);
            }
        }
        line(
            10,
            "determinism",
            differing.is_empty() && !first_run.is_empty(),
            &format!("{} artifacts re-generated, differing: {:?}", first_run.len(), differing),
        );
    }

    if !all_pass {
        std::process::exit(1);
    }
}
