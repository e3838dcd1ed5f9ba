//! Command-line interface for the envy-free house allocation solver suite.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 method/model mismatch,
//! 4 enumeration or search cap exceeded.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use efhouse::compact::{max_prob_ef_compact, CompactError, CompactSolveResult, DEFAULT_MATRIX_CAP};
use efhouse::deciders::{
    decide_certainly_ef, decide_possibly_ef, DecideError, Method, DEFAULT_SEARCH_CAP,
};
use efhouse::efprob::ef_prob_report;
use efhouse::gen::{
    is_compact_reduction, is_pairwise_reduction, lottery_to_joint, lottery_to_pairwise,
    r3xc_reduction, random_instance, GadgetConfig, GenError, Graph, R3xcInput, RandomModel,
};
use efhouse::instance::{Instance, ModelKind};
use efhouse::io::{parse_allocation, parse_instance, serialize_instance, IoError};
use efhouse::solvers::{
    brute_force_max_prob_ef, solve_max_prob_ef_enumerate, SolveError, SubsetResult,
    DEFAULT_ENUMERATION_CAP,
};
use efhouse::Prob;

#[derive(Parser)]
#[command(
    name = "efhouse",
    about = "Exact solvers for envy-free house allocation under uncertain preferences",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact EF-probability of an allocation, with per-agent breakdown
    Prob {
        /// Instance file (JSON)
        #[arg(short, long)]
        instance: PathBuf,
        /// Allocation file (JSON map from agent index to house name)
        #[arg(short, long)]
        alloc: PathBuf,
    },
    /// Compute an allocation maximizing the EF-probability
    Solve {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: SolveMethod,
        /// Threshold for the compact-eps method (rational, e.g. 1/2)
        #[arg(long)]
        epsilon: Option<String>,
        /// Worker threads for subset enumeration
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Enumeration cap override
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Decide whether a possibly- or certainly-EF allocation exists
    Decide {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        property: Property,
        /// Search cap override
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Generate an instance file
    Gen(GenArgs),
    /// Run a benchmark suite from a config file, emitting CSV
    Bench {
        /// Suite config (JSON)
        #[arg(short, long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMethod {
    /// Subset enumeration with exact matching (independent models)
    Enumerate,
    /// Envy-matrix enumeration with an epsilon certificate (compact only)
    CompactEps,
    /// Exhaustive search over all allocations (any model)
    Brute,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Possible,
    Certain,
}

#[derive(Args)]
struct GenArgs {
    /// What to generate
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Output instance file
    #[arg(short, long)]
    out: PathBuf,
    /// Random model (for --kind random)
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    houses: Option<usize>,
    /// Lottery/joint support size
    #[arg(long)]
    support: Option<usize>,
    /// Largest tie class for random compact instances
    #[arg(long)]
    max_class: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Source instance (for lottery-to-joint / lottery-to-pairwise)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Graph file {"vertices": N, "edges": [[u, v], ...]}
    #[arg(long)]
    graph: Option<PathBuf>,
    /// R3XC file {"ground_size": N, "subsets": [[a, b, c], ...]}
    #[arg(long)]
    r3xc: Option<PathBuf>,
    /// Independent-set target size
    #[arg(long)]
    target: Option<usize>,
    /// Penalty gadget multiplicity
    #[arg(long, default_value_t = 1)]
    alpha: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Random,
    R3xc,
    IsCompact,
    LotteryToJoint,
    LotteryToPairwise,
    IsPairwise,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Lottery,
    Compact,
    Joint,
    Pairwise,
}

/// Error classes mapped to stable exit codes.
enum CliError {
    Parse(String),
    MethodMismatch(String),
    CapExceeded(String),
    BenchFailures(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::MethodMismatch(_) => 3,
            CliError::CapExceeded(_) => 4,
            CliError::BenchFailures(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "error: {m}"),
            CliError::MethodMismatch(m) => write!(f, "error: {m}"),
            CliError::CapExceeded(m) => write!(f, "error: {m}"),
            CliError::BenchFailures(k) => write!(f, "error: {k} benchmark case(s) failed"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotIndependentModel => CliError::MethodMismatch(e.to_string()),
            SolveError::EnumerationCapExceeded { .. } => CliError::CapExceeded(e.to_string()),
        }
    }
}

impl From<CompactError> for CliError {
    fn from(e: CompactError) -> Self {
        match e {
            CompactError::MatrixEnumerationCapExceeded { .. } => {
                CliError::CapExceeded(e.to_string())
            }
            CompactError::InvalidEpsilon(_) => CliError::Parse(e.to_string()),
        }
    }
}

impl From<DecideError> for CliError {
    fn from(e: DecideError) -> Self {
        CliError::CapExceeded(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    Ok(parse_instance(&read_file(path)?)?)
}

fn digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    let hex: String = out.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}

fn alloc_names(inst: &Instance, alloc: &efhouse::Allocation) -> String {
    alloc
        .as_slice()
        .iter()
        .map(|&h| inst.house_name(h))
        .collect::<Vec<_>>()
        .join(", ")
}

fn print_report_header(command: &str, instance_path: &Path, text: &str) {
    println!("command: {command}");
    println!("instance: {} sha256:{}", instance_path.display(), digest(text));
}

fn cmd_prob(instance_path: &Path, alloc_path: &Path) -> Result<(), CliError> {
    let text = read_file(instance_path)?;
    let inst = parse_instance(&text)?;
    let alloc = parse_allocation(&read_file(alloc_path)?, &inst)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let start = Instant::now();
    let report = ef_prob_report(&inst, &alloc).map_err(|e| CliError::Parse(e.to_string()))?;
    print_report_header("prob", instance_path, &text);
    println!("model: {}", inst.model());
    println!("ef_prob: {}", report.overall);
    for (i, q) in report.q.iter().enumerate() {
        match report.tie_sets.as_ref() {
            Some(ties) => {
                let set: Vec<String> = ties[i].iter().map(|j| j.to_string()).collect();
                println!("q[{i}]: {q} ties: {{{}}}", set.join(", "));
            }
            None => println!("q[{i}]: {q}"),
        }
    }
    println!("time_ms: {}", start.elapsed().as_millis());
    Ok(())
}

fn describe_subset_result(inst: &Instance, r: &SubsetResult) -> Vec<String> {
    let subset: Vec<&str> = r.subset.iter().map(|&h| inst.house_name(h)).collect();
    let mut lines = vec![
        format!("subset: [{}]", subset.join(", ")),
        format!("allocation: [{}]", alloc_names(inst, &r.allocation)),
        format!("prob: {}", r.prob),
    ];
    if r.zero_probability {
        lines.push("zero_probability: true".to_string());
    }
    lines
}

fn cmd_solve(
    instance_path: &Path,
    method: SolveMethod,
    epsilon: Option<&str>,
    threads: usize,
    cap: Option<u64>,
) -> Result<(), CliError> {
    let text = read_file(instance_path)?;
    let inst = parse_instance(&text)?;
    let start = Instant::now();
    print_report_header("solve", instance_path, &text);
    println!("model: {}", inst.model());
    match method {
        SolveMethod::Enumerate => {
            println!("method: enumerate");
            println!("threads: {threads}");
            let r = solve_max_prob_ef_enumerate(
                &inst,
                cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
                threads,
            )?;
            for line in describe_subset_result(&inst, &r) {
                println!("{line}");
            }
        }
        SolveMethod::Brute => {
            println!("method: brute");
            let r = brute_force_max_prob_ef(&inst, cap.unwrap_or(DEFAULT_ENUMERATION_CAP))?;
            for line in describe_subset_result(&inst, &r) {
                println!("{line}");
            }
        }
        SolveMethod::CompactEps => {
            let eps: Prob = epsilon
                .ok_or_else(|| CliError::Parse("--epsilon is required for compact-eps".into()))?
                .parse()
                .map_err(|e| CliError::Parse(format!("invalid epsilon: {e}")))?;
            let prefs = inst.compact_prefs().ok_or_else(|| {
                CliError::MethodMismatch(format!(
                    "compact-eps requires a compact instance, got {}",
                    inst.model()
                ))
            })?;
            println!("method: compact-eps");
            println!("epsilon: {eps}");
            match max_prob_ef_compact(prefs, &eps, cap.unwrap_or(DEFAULT_MATRIX_CAP))? {
                CompactSolveResult::Optimal { allocation, prob } => {
                    println!("allocation: [{}]", alloc_names(&inst, &allocation));
                    println!("prob: {prob}");
                }
                CompactSolveResult::CertificateBelowEpsilon => {
                    println!("certificate: every allocation has EF-probability below {eps}");
                }
            }
        }
    }
    println!("time_ms: {}", start.elapsed().as_millis());
    Ok(())
}

fn cmd_decide(instance_path: &Path, property: Property, cap: Option<u64>) -> Result<(), CliError> {
    let text = read_file(instance_path)?;
    let inst = parse_instance(&text)?;
    let cap = cap.unwrap_or(DEFAULT_SEARCH_CAP);
    let start = Instant::now();
    let decision = match property {
        Property::Possible => decide_possibly_ef(&inst, cap)?,
        Property::Certain => decide_certainly_ef(&inst, cap)?,
    };
    print_report_header("decide", instance_path, &text);
    println!("model: {}", inst.model());
    println!(
        "property: {}",
        match property {
            Property::Possible => "possible",
            Property::Certain => "certain",
        }
    );
    println!("answer: {}", if decision.answer { "yes" } else { "no" });
    if let Some(w) = &decision.witness {
        println!("witness: [{}]", alloc_names(&inst, w));
    }
    println!(
        "decide_method: {}",
        match decision.method {
            Method::Polynomial => "polynomial",
            Method::Exhaustive => "exhaustive",
        }
    );
    println!("time_ms: {}", start.elapsed().as_millis());
    Ok(())
}

fn parse_graph_file(path: &Path) -> Result<Graph, CliError> {
    let text = read_file(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("invalid graph JSON: {e}")))?;
    let vertices = v["vertices"]
        .as_u64()
        .ok_or_else(|| CliError::Parse("graph: missing `vertices`".into()))? as usize;
    let edges = v["edges"]
        .as_array()
        .ok_or_else(|| CliError::Parse("graph: missing `edges`".into()))?
        .iter()
        .map(|e| {
            let pair = e
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| CliError::Parse("graph: edge must be a pair".into()))?;
            let u = pair[0]
                .as_u64()
                .ok_or_else(|| CliError::Parse("graph: bad vertex".into()))? as usize;
            let w = pair[1]
                .as_u64()
                .ok_or_else(|| CliError::Parse("graph: bad vertex".into()))? as usize;
            Ok((u, w))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Graph::new(vertices, edges)?)
}

fn parse_r3xc_file(path: &Path) -> Result<R3xcInput, CliError> {
    let text = read_file(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("invalid R3XC JSON: {e}")))?;
    let ground = v["ground_size"]
        .as_u64()
        .ok_or_else(|| CliError::Parse("r3xc: missing `ground_size`".into()))? as usize;
    let subsets = v["subsets"]
        .as_array()
        .ok_or_else(|| CliError::Parse("r3xc: missing `subsets`".into()))?
        .iter()
        .map(|s| {
            let t = s
                .as_array()
                .filter(|t| t.len() == 3)
                .ok_or_else(|| CliError::Parse("r3xc: subset must be a triple".into()))?;
            let mut out = [0usize; 3];
            for (k, x) in t.iter().enumerate() {
                out[k] = x
                    .as_u64()
                    .ok_or_else(|| CliError::Parse("r3xc: bad element".into()))?
                    as usize;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(R3xcInput::new(ground, subsets)?)
}

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let need = |opt: Option<usize>, what: &str| {
        opt.ok_or_else(|| CliError::Parse(format!("--{what} is required for this kind")))
    };
    let inst = match args.kind {
        GenKind::Random => {
            let model = args
                .model
                .ok_or_else(|| CliError::Parse("--model is required for random".into()))?;
            let n = need(args.agents, "agents")?;
            let m = need(args.houses, "houses")?;
            let rm = match model {
                ModelArg::Lottery => RandomModel::Lottery {
                    support: need(args.support, "support")?,
                },
                ModelArg::Compact => RandomModel::Compact {
                    max_class: need(args.max_class, "max-class")?,
                },
                ModelArg::Joint => RandomModel::Joint {
                    support: need(args.support, "support")?,
                },
                ModelArg::Pairwise => RandomModel::Pairwise,
            };
            random_instance(&rm, n, m, args.seed)?
        }
        GenKind::R3xc => {
            let path = args
                .r3xc
                .as_ref()
                .ok_or_else(|| CliError::Parse("--r3xc is required".into()))?;
            r3xc_reduction(&parse_r3xc_file(path)?)?
        }
        GenKind::IsCompact => {
            let path = args
                .graph
                .as_ref()
                .ok_or_else(|| CliError::Parse("--graph is required".into()))?;
            let graph = parse_graph_file(path)?;
            let k = args.target.unwrap_or(1);
            let (inst, _layout) =
                is_compact_reduction(&graph, k, &GadgetConfig::with_alpha(args.alpha))?;
            inst
        }
        GenKind::LotteryToJoint => {
            let path = args
                .input
                .as_ref()
                .ok_or_else(|| CliError::Parse("--input is required".into()))?;
            lottery_to_joint(&load_instance(path)?)?
        }
        GenKind::LotteryToPairwise => {
            let path = args
                .input
                .as_ref()
                .ok_or_else(|| CliError::Parse("--input is required".into()))?;
            lottery_to_pairwise(&load_instance(path)?)?
        }
        GenKind::IsPairwise => {
            let path = args
                .graph
                .as_ref()
                .ok_or_else(|| CliError::Parse("--graph is required".into()))?;
            let graph = parse_graph_file(path)?;
            let k = args
                .target
                .ok_or_else(|| CliError::Parse("--target is required".into()))?;
            is_pairwise_reduction(&graph, k)?
        }
    };
    let text = serialize_instance(&inst);
    fs::write(&args.out, &text)
        .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", args.out.display())))?;
    println!("command: gen");
    println!("out: {}", args.out.display());
    println!("digest: sha256:{}", digest(&text));
    println!("agents: {}", inst.num_agents());
    println!("houses: {}", inst.num_houses());
    println!("model: {}", inst.model());
    if matches!(args.kind, GenKind::Random) {
        println!("seed: {}", args.seed);
    }
    Ok(())
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn bench_case(case: &serde_json::Value) -> Result<(Instance, ModelKind, Option<u64>), CliError> {
    if let Some(gen_args) = case.get("gen") {
        let model = gen_args["model"]
            .as_str()
            .ok_or_else(|| CliError::Parse("bench gen: missing model".into()))?;
        let n = gen_args["agents"]
            .as_u64()
            .ok_or_else(|| CliError::Parse("bench gen: missing agents".into()))?
            as usize;
        let m = gen_args["houses"]
            .as_u64()
            .ok_or_else(|| CliError::Parse("bench gen: missing houses".into()))?
            as usize;
        let seed = gen_args["seed"].as_u64().unwrap_or(0);
        let rm = match model {
            "lottery" => RandomModel::Lottery {
                support: gen_args["support"].as_u64().unwrap_or(2) as usize,
            },
            "compact" => RandomModel::Compact {
                max_class: gen_args["max_class"].as_u64().unwrap_or(2) as usize,
            },
            "joint" => RandomModel::Joint {
                support: gen_args["support"].as_u64().unwrap_or(2) as usize,
            },
            "pairwise" => RandomModel::Pairwise,
            other => return Err(CliError::Parse(format!("bench gen: unknown model {other}"))),
        };
        let inst = random_instance(&rm, n, m, seed)?;
        let kind = inst.model();
        Ok((inst, kind, Some(seed)))
    } else if let Some(path) = case.get("instance").and_then(|v| v.as_str()) {
        let inst = load_instance(Path::new(path))?;
        let kind = inst.model();
        Ok((inst, kind, None))
    } else {
        Err(CliError::Parse(
            "bench case needs either `gen` or `instance`".into(),
        ))
    }
}

fn cmd_bench(config_path: &Path) -> Result<(), CliError> {
    let text = read_file(config_path)?;
    let config: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("invalid bench config: {e}")))?;
    let cases = config["cases"]
        .as_array()
        .ok_or_else(|| CliError::Parse("bench config: missing `cases`".into()))?;
    println!("n,m,model,method,prob,time_ms,seed,status");
    let mut failures = 0usize;
    for case in cases {
        let method = case["method"].as_str().unwrap_or("enumerate").to_string();
        let threads = case["threads"].as_u64().unwrap_or(1) as usize;
        let outcome = (|| -> Result<(usize, usize, String, Option<u64>, String, u128), CliError> {
            let (inst, kind, seed) = bench_case(case)?;
            let start = Instant::now();
            let prob = match method.as_str() {
                "enumerate" => {
                    solve_max_prob_ef_enumerate(&inst, DEFAULT_ENUMERATION_CAP, threads)?
                        .prob
                        .to_string()
                }
                "brute" => brute_force_max_prob_ef(&inst, DEFAULT_ENUMERATION_CAP)?
                    .prob
                    .to_string(),
                "compact-eps" => {
                    let eps: Prob = case["epsilon"]
                        .as_str()
                        .unwrap_or("1/2")
                        .parse()
                        .map_err(|e| CliError::Parse(format!("bad epsilon: {e}")))?;
                    let prefs = inst.compact_prefs().ok_or_else(|| {
                        CliError::MethodMismatch("compact-eps requires compact".into())
                    })?;
                    match max_prob_ef_compact(prefs, &eps, DEFAULT_MATRIX_CAP)? {
                        CompactSolveResult::Optimal { prob, .. } => prob.to_string(),
                        CompactSolveResult::CertificateBelowEpsilon => String::new(),
                    }
                }
                other => {
                    return Err(CliError::Parse(format!("bench: unknown method {other}")));
                }
            };
            Ok((
                inst.num_agents(),
                inst.num_houses(),
                kind.as_str().to_string(),
                seed,
                prob,
                start.elapsed().as_millis(),
            ))
        })();
        match outcome {
            Ok((n, m, model, seed, prob, ms)) => {
                let status = if prob.is_empty() { "certificate" } else { "ok" };
                println!(
                    "{n},{m},{model},{},{},{ms},{},{status}",
                    csv_escape(&method),
                    prob,
                    seed.map_or(String::new(), |s| s.to_string()),
                );
            }
            Err(e) => {
                failures += 1;
                println!(",,,{},,,,error: {}", csv_escape(&method), csv_escape(&e.to_string()));
            }
        }
    }
    if failures > 0 {
        return Err(CliError::BenchFailures(failures));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Prob { instance, alloc } => cmd_prob(instance, alloc),
        Command::Solve {
            instance,
            method,
            epsilon,
            threads,
            cap,
        } => cmd_solve(instance, *method, epsilon.as_deref(), *threads, *cap),
        Command::Decide {
            instance,
            property,
            cap,
        } => cmd_decide(instance, *property, *cap),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench { config } => cmd_bench(config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
