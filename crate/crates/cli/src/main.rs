use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use faircut::auxcut::{self, AuxCutDoc, AuxCutInstance};
use faircut::demfair::{self, DemographicSpec, DpConfig, LpRoundConfig, Method};
use faircut::embed::{self, EmbedConfig, EmbeddingDoc, TreeEmbedding, DEFAULT_EXHAUSTIVE_BOUND};
use faircut::graph::Edge;
use faircut::indfair::{self, CutDistribution, IndFairConfig, ProtectionDoc, ProtectionSpec};
use faircut::oracle::{self, DEFAULT_MAX_N, DEFAULT_PLP_MAX_N};
use faircut::rational::{self, Q};
use faircut::{Error, VertexId, WeightedGraph};

const EXIT_INPUT: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "faircut", version, about = "Fair graph-cut solvers with brute-force oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cheapest cut disconnecting at least `target` vertices from the source
    Sbmincc {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        target: usize,
        #[command(flatten)]
        solver: Solver,
    },
    /// Cheapest cut meeting per-group coverage fractions
    Demfair {
        #[command(flatten)]
        io: Io,
        /// JSON file: {"groups": [{"members": [..], "fraction": "p/q"}]}
        #[arg(long)]
        groups: PathBuf,
        #[command(flatten)]
        solver: Solver,
    },
    /// Smallest budget admitting a distribution over cuts meeting every
    /// per-vertex protection probability
    Indfair {
        #[command(flatten)]
        io: Io,
        /// JSON file: {"target": T, "probabilities": {"v": "p/q"}}
        #[arg(long)]
        protection: PathBuf,
        /// overrides the target in the protection file
        #[arg(long)]
        target: Option<usize>,
        /// budget sweep step, in (0, 1)
        #[arg(long, default_value = "1/4")]
        epsilon: String,
        #[arg(long, default_value = "build")]
        embedding: String,
    },
    /// Most valuable cut of cost at most `budget` protecting at least `target` vertices
    Auxcut {
        #[command(flatten)]
        aux: AuxArgs,
        /// discretization slack; exact by default on integral trees, 1/8 otherwise
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "build")]
        embedding: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and certify a tree embedding
    Embed {
        #[command(flatten)]
        io: Io,
        /// defaults to ceil(log2 n) + 1
        #[arg(long)]
        num_trees: Option<usize>,
    },
    /// Exact answers by subset enumeration
    Oracle {
        #[command(subcommand)]
        problem: OracleCommand,
    },
    /// Draw one cut from a distribution written by `indfair`
    Sample {
        /// indfair output, or a bare distribution object
        #[arg(long)]
        distribution: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    Sbmincc {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
    },
    Demfair {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        groups: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
    },
    Auxcut {
        #[command(flatten)]
        aux: AuxArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Plp {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        protection: PathBuf,
        #[arg(long)]
        budget: String,
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_PLP_MAX_N)]
        max_n: usize,
    },
}

#[derive(Args)]
struct Io {
    /// text graph (`n m s` then `u v cost` lines) or JSON graph
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Solver {
    #[arg(long, value_enum, default_value_t = MethodArg::Dp)]
    method: MethodArg,
    /// coverage slack of the LP rounding, in (0, 1)
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    /// `build`, or a JSON embedding written by `embed`
    #[arg(long, default_value = "build")]
    embedding: String,
}

#[derive(Args)]
struct AuxArgs {
    /// JSON file with budget, target and vertex_weights; `graph` is resolved
    /// relative to it
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    target: Option<usize>,
    /// JSON object mapping vertex ids to weights
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dp,
    Lp,
}

/// JSON alternative to the text graph format.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    num_vertices: usize,
    source: VertexId,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
#[serde(transparent)]
struct WeightsDoc(#[serde(with = "rational::serde_q::map")] BTreeMap<VertexId, Q>);

#[derive(Serialize)]
struct Envelope {
    command: String,
    seed: u64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    result: Value,
}

struct Outcome {
    command: String,
    seed: u64,
    out: Option<PathBuf>,
    infeasible: Option<String>,
    result: Value,
    summary: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let (name, seed, out) = describe(&cli.command);
    match run(cli.command) {
        Ok(o) => finish(o),
        Err(e) => match e.downcast_ref::<Error>() {
            Some(Error::Infeasible(reason)) => finish(Outcome {
                command: name,
                seed,
                out,
                infeasible: Some(reason.clone()),
                result: Value::Null,
                summary: format!("infeasible: {reason}"),
            }),
            _ => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_INPUT)
            }
        },
    }
}

fn describe(c: &Command) -> (String, u64, Option<PathBuf>) {
    match c {
        Command::Sbmincc { io, .. } => ("sbmincc".into(), io.seed, io.out.clone()),
        Command::Demfair { io, .. } => ("demfair".into(), io.seed, io.out.clone()),
        Command::Indfair { io, .. } => ("indfair".into(), io.seed, io.out.clone()),
        Command::Auxcut { seed, out, .. } => ("auxcut".into(), *seed, out.clone()),
        Command::Embed { io, .. } => ("embed".into(), io.seed, io.out.clone()),
        Command::Sample { seed, out, .. } => ("sample".into(), *seed, out.clone()),
        Command::Oracle { problem } => match problem {
            OracleCommand::Sbmincc { io, .. } => ("oracle sbmincc".into(), io.seed, io.out.clone()),
            OracleCommand::Demfair { io, .. } => ("oracle demfair".into(), io.seed, io.out.clone()),
            OracleCommand::Auxcut { out, .. } => ("oracle auxcut".into(), 0, out.clone()),
            OracleCommand::Plp { io, .. } => ("oracle plp".into(), io.seed, io.out.clone()),
        },
    }
}

fn finish(o: Outcome) -> ExitCode {
    let env = Envelope {
        command: o.command,
        seed: o.seed,
        status: if o.infeasible.is_some() { "infeasible" } else { "ok" },
        reason: o.infeasible.clone(),
        result: o.result,
    };
    let mut text = serde_json::to_string_pretty(&env).expect("serializable output");
    text.push('\n');
    if let Err(e) = emit(o.out.as_deref(), &text) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INPUT);
    }
    eprintln!("{}", o.summary);
    if o.infeasible.is_some() {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::SUCCESS
    }
}

/// Stdout, or a sibling temp file renamed over `out`.
fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    let Some(out) = out else {
        std::io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    };
    let name = out.file_name().ok_or_else(|| anyhow!("--out {} is not a file path", out.display()))?;
    let tmp = out.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, out).with_context(|| format!("renaming {} to {}", tmp.display(), out.display()))?;
    Ok(())
}

fn run(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Sbmincc { io, target, solver } => {
            let g = load_graph(&io.graph)?;
            let spec = DemographicSpec::single_group(&g, target)?;
            let mut o = run_demfair(&g, &spec, &solver, io.seed, "sbmincc")?;
            o.out = io.out;
            if let Value::Object(m) = &mut o.result {
                m.insert("target".into(), json!(target));
            }
            Ok(o)
        }
        Command::Demfair { io, groups, solver } => {
            let g = load_graph(&io.graph)?;
            let spec: DemographicSpec = load_json(&groups)?;
            spec.validate_for(&g).with_context(|| format!("{}", groups.display()))?;
            let mut o = run_demfair(&g, &spec, &solver, io.seed, "demfair")?;
            o.out = io.out;
            Ok(o)
        }
        Command::Indfair { io, protection, target, epsilon, embedding } => {
            let g = load_graph(&io.graph)?;
            let spec = load_protection(&g, &protection, target)?;
            let cfg = IndFairConfig::new(parse_epsilon(&epsilon)?);
            let emb = load_embedding(&g, &embedding, io.seed)?;
            let sol = indfair::indfair_solve(&g, &spec, &emb, &cfg)?;
            let summary = format!(
                "budget {} with {} support cuts of cost at most {}",
                rational::format(&sol.budget),
                sol.distribution.support.len(),
                rational::format(&(&sol.class_factor * &sol.budget))
            );
            let mut result = serde_json::to_value(&sol)?;
            insert(&mut result, "epsilon", json!(rational::format(&cfg.epsilon)));
            insert(&mut result, "embedding", embedding_summary(&emb));
            Ok(Outcome { command: "indfair".into(), seed: io.seed, out: io.out, infeasible: None, result, summary })
        }
        Command::Auxcut { aux, epsilon, seed, embedding, out } => {
            let inst = load_aux(&aux)?;
            let emb = load_embedding(&inst.graph, &embedding, seed)?;
            let eps = match epsilon {
                Some(e) => parse_epsilon(&e)?,
                None if emb.trees.len() == 1 && emb.certified_stretch == rational::q(1) && integral(&inst) => {
                    auxcut::integral_exact_epsilon(&inst.budget)
                }
                None => Q::new(auxcut::DEFAULT_EPSILON.0.into(), auxcut::DEFAULT_EPSILON.1.into()),
            };
            let sol = auxcut::auxcut_general(&inst, &emb, &eps)?;
            let summary = format!(
                "value {} at cost {} protecting {} vertices",
                rational::format(&sol.solution.value),
                rational::format(&sol.solution.cut.cost),
                sol.solution.cut.protected.len()
            );
            let mut result = serde_json::to_value(&sol)?;
            insert(&mut result, "budget", json!(rational::format(&inst.budget)));
            insert(&mut result, "target", json!(inst.target));
            insert(&mut result, "epsilon", json!(rational::format(&eps)));
            insert(&mut result, "embedding", embedding_summary(&emb));
            Ok(Outcome { command: "auxcut".into(), seed, out, infeasible: None, result, summary })
        }
        Command::Embed { io, num_trees } => {
            let g = load_graph(&io.graph)?;
            let emb = embed::build_embedding(&g, &EmbedConfig { num_trees, seed: io.seed, ..EmbedConfig::default() })?;
            let summary = format!(
                "{} trees, certified stretch {} ({})",
                emb.trees.len(),
                rational::format(&emb.certified_stretch),
                mode_name(&emb)
            );
            let result = serde_json::to_value(emb.to_doc())?;
            Ok(Outcome { command: "embed".into(), seed: io.seed, out: io.out, infeasible: None, result, summary })
        }
        Command::Sample { distribution, seed, out } => {
            let raw: Value = load_json(&distribution)?;
            let body = raw.pointer("/result/distribution").cloned().unwrap_or(raw);
            let dist: CutDistribution = serde_json::from_value(body)
                .with_context(|| format!("{}: not a cut distribution", distribution.display()))?;
            check_distribution(&dist)?;
            let cut = indfair::sample(&dist, seed);
            let summary = format!("cut of cost {} protecting {:?}", rational::format(&cut.cost), cut.protected);
            let result = json!({ "cut": cut });
            Ok(Outcome { command: "sample".into(), seed, out, infeasible: None, result, summary })
        }
        Command::Oracle { problem } => run_oracle(problem),
    }
}

fn run_demfair(
    g: &WeightedGraph,
    spec: &DemographicSpec,
    solver: &Solver,
    seed: u64,
    name: &str,
) -> anyhow::Result<Outcome> {
    let emb = load_embedding(g, &solver.embedding, seed)?;
    let (method, eps) = match solver.method {
        MethodArg::Dp => (Method::Dp(DpConfig::default()), None),
        MethodArg::Lp => {
            let eps = parse_epsilon(&solver.epsilon)?;
            (Method::Lp(LpRoundConfig::new(eps.clone(), seed)), Some(eps))
        }
    };
    let sol = demfair::demfair_general(g, spec, &method, &emb)?;
    let summary = format!(
        "cut of cost {} protecting {} vertices (tree {})",
        rational::format(&sol.cut.cost),
        sol.cut.protected.len(),
        sol.tree
    );
    let mut result = serde_json::to_value(&sol)?;
    insert(&mut result, "method", json!(if eps.is_some() { "lp" } else { "dp" }));
    insert(&mut result, "epsilon", json!(eps.as_ref().map(rational::format)));
    insert(&mut result, "coverage", json!(spec.coverage(&sol.cut.protected)));
    insert(&mut result, "embedding", embedding_summary(&emb));
    Ok(Outcome { command: name.into(), seed, out: None, infeasible: None, result, summary })
}

fn run_oracle(problem: OracleCommand) -> anyhow::Result<Outcome> {
    let (name, seed, out, report, g) = match problem {
        OracleCommand::Sbmincc { io, target, max_n } => {
            let g = load_graph(&io.graph)?;
            ("oracle sbmincc", io.seed, io.out, oracle::oracle_sbmincc(&g, target, max_n)?, g)
        }
        OracleCommand::Demfair { io, groups, max_n } => {
            let g = load_graph(&io.graph)?;
            let spec: DemographicSpec = load_json(&groups)?;
            ("oracle demfair", io.seed, io.out, oracle::oracle_demfair(&g, &spec, max_n)?, g)
        }
        OracleCommand::Auxcut { aux, max_n, out } => {
            let inst = load_aux(&aux)?;
            let report = oracle::oracle_auxcut(&inst, max_n)?;
            ("oracle auxcut", 0, out, report, inst.graph)
        }
        OracleCommand::Plp { io, protection, budget, target, max_n } => {
            let g = load_graph(&io.graph)?;
            let spec = load_protection(&g, &protection, target)?;
            let b = parse_q(&budget, "--budget")?;
            ("oracle plp", io.seed, io.out, oracle::oracle_plp_feasible(&g, &spec, &b, max_n)?, g)
        }
    };
    report.verify_witness(&g)?;
    let summary = match &report.optimum {
        Some(v) => format!("optimum {} over {} subsets", rational::format(v), report.enumerated),
        None if report.feasible => format!("feasible over {} subsets", report.enumerated),
        None => format!("infeasible over {} subsets", report.enumerated),
    };
    let infeasible = (!report.feasible).then(|| "no feasible solution exists".to_string());
    let result = serde_json::to_value(&report)?;
    Ok(Outcome { command: name.into(), seed, out, infeasible, result, summary })
}

fn insert(v: &mut Value, key: &str, x: Value) {
    if let Value::Object(m) = v {
        m.insert(key.into(), x);
    }
}

fn mode_name(emb: &TreeEmbedding) -> String {
    serde_json::to_value(emb.certification_mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn embedding_summary(emb: &TreeEmbedding) -> Value {
    json!({
        "trees": emb.trees.len(),
        "multipliers": emb.multipliers.iter().map(rational::format).collect::<Vec<_>>(),
        "certified_stretch": rational::format(&emb.certified_stretch),
        "certification_mode": mode_name(emb),
    })
}

fn integral(inst: &AuxCutInstance) -> bool {
    inst.budget.is_integer() && inst.graph.edges().iter().all(|e| e.cost.is_integer())
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).with_context(|| format!("{}", path.display()))
}

fn load_graph(path: &Path) -> anyhow::Result<WeightedGraph> {
    let text = read(path)?;
    let g = if text.trim_start().starts_with('{') {
        let doc: GraphDoc = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
        WeightedGraph::new(doc.num_vertices, doc.edges, doc.source)
    } else {
        faircut::parse_graph(&text)
    };
    g.with_context(|| format!("{}", path.display()))
}

fn load_protection(g: &WeightedGraph, path: &Path, target: Option<usize>) -> anyhow::Result<ProtectionSpec> {
    let mut doc: ProtectionDoc = load_json(path)?;
    if let Some(t) = target {
        doc.target = t;
    }
    ProtectionSpec::from_doc(g, &doc).with_context(|| format!("{}", path.display()))
}

fn load_aux(a: &AuxArgs) -> anyhow::Result<AuxCutInstance> {
    let doc: Option<AuxCutDoc> = a.instance.as_deref().map(load_json).transpose()?;
    let graph_path = match (&a.graph, doc.as_ref().and_then(|d| d.graph.as_ref())) {
        (Some(p), _) => p.clone(),
        (None, Some(rel)) => a.instance.as_deref().and_then(Path::parent).unwrap_or(Path::new(".")).join(rel),
        (None, None) => bail!("--graph is required unless the instance file names one"),
    };
    let g = load_graph(&graph_path)?;
    let budget = match (&a.budget, &doc) {
        (Some(b), _) => parse_q(b, "--budget")?,
        (None, Some(d)) => d.budget.clone(),
        (None, None) => bail!("--budget is required without --instance"),
    };
    let target = match (a.target, &doc) {
        (Some(t), _) => t,
        (None, Some(d)) => d.target,
        (None, None) => bail!("--target is required without --instance"),
    };
    let weights = match (&a.weights, &doc) {
        (Some(p), _) => load_json::<WeightsDoc>(p)?.0,
        (None, Some(d)) => d.vertex_weights.clone(),
        (None, None) => BTreeMap::new(),
    };
    Ok(AuxCutInstance::new(g, budget, target, &weights)?)
}

fn load_embedding(g: &WeightedGraph, source: &str, seed: u64) -> anyhow::Result<TreeEmbedding> {
    if source == "build" {
        return Ok(embed::build_embedding(g, &EmbedConfig { seed, ..EmbedConfig::default() })?);
    }
    let path = Path::new(source);
    let raw: Value = load_json(path)?;
    let body = raw.get("result").filter(|_| raw.get("command").is_some()).cloned().unwrap_or(raw);
    let doc: EmbeddingDoc =
        serde_json::from_value(body).with_context(|| format!("{}: not an embedding", path.display()))?;
    TreeEmbedding::from_doc(g, &doc, DEFAULT_EXHAUSTIVE_BOUND, seed).with_context(|| format!("{}", path.display()))
}

fn check_distribution(d: &CutDistribution) -> anyhow::Result<()> {
    if d.support.is_empty() || d.support.len() != d.probabilities.len() {
        bail!("distribution needs one probability per support cut");
    }
    if d.probabilities.iter().any(|p| !rational::is_probability(p)) || rational::sum(&d.probabilities) != rational::q(1)
    {
        bail!("distribution probabilities must be non-negative and sum to 1");
    }
    Ok(())
}

fn parse_q(s: &str, flag: &str) -> anyhow::Result<Q> {
    rational::parse(s).with_context(|| format!("{flag} `{s}`"))
}

fn parse_epsilon(s: &str) -> anyhow::Result<Q> {
    let e = parse_q(s, "--epsilon")?;
    if !(e > rational::q(0) && e < rational::q(1)) {
        bail!("--epsilon must lie in (0, 1), got {s}");
    }
    Ok(e)
}
