//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on any domain error (bad files, unprunable
//! layers, oversized oracle requests), 2 on flag misuse.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::centrality::{check_ratio, Method, PruneSelection};
use crate::oracle::{optimal_subset, DEFAULT_LIMIT};
use crate::pipeline::{layer_similarity, score_with_similarity, LayerScoring};
use crate::planner::{build_plan, PruningPlan};
use crate::report;
use crate::tensor_io::{LayerKind, Model};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "filterprune", version, about = "Centrality-based CNN filter pruning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score conv layers with one method and emit a pruning plan.
    Score(ScoreArgs),
    /// Exhaustively find the least-redundant keep-set of one small layer.
    Oracle(OracleArgs),
    /// Run several methods at the same ratio and report each plan.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct RatioArgs {
    /// Pruning ratio applied to every selected layer.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Per-layer ratios, e.g. "conv1=0.25,conv2=0.5".
    #[arg(long, value_name = "SPEC")]
    pub ratio_per_layer: Option<String>,
    /// Comma-separated conv layers to prune (default: every conv layer).
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_scorer)]
    pub method: Method,
    #[command(flatten)]
    pub ratios: RatioArgs,
    /// Include per-filter scores in the report.
    #[arg(long)]
    pub emit_scores: bool,
    /// Report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for layer scoring (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub layer: String,
    #[arg(long)]
    pub ratio: f64,
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    pub limit: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub ratios: RatioArgs,
    /// Methods to run, in report order.
    #[arg(long, value_delimiter = ',', value_parser = parse_scorer, default_value = "wdc,bc,l1,gm,cs")]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub emit_scores: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

fn parse_scorer(s: &str) -> Result<Method, String> {
    match s.parse()? {
        Method::Oracle => Err("use the oracle subcommand for exhaustive search".into()),
        m => Ok(m),
    }
}

/// Distinguishes flag misuse (exit 2) from domain failures (exit 1).
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

/// Parses `"a=0.25,b=0.5"`.
pub fn parse_ratio_spec(spec: &str) -> Result<Vec<(String, f64)>, String> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected layer=ratio, got {item:?}"))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(format!("missing layer name in {item:?}"));
            }
            let p: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("bad ratio in {item:?}"))?;
            Ok((name.to_string(), p))
        })
        .collect()
}

/// Layers to prune, in manifest order, with their ratios.
fn resolve_layers(model: &Model, args: &RatioArgs) -> Result<Vec<(String, f64)>, Failure> {
    let overrides = match &args.ratio_per_layer {
        Some(spec) => parse_ratio_spec(spec).map_err(Failure::Usage)?,
        None => Vec::new(),
    };
    if args.ratio.is_none() && overrides.is_empty() {
        return Err(Failure::Usage(
            "one of --ratio or --ratio-per-layer is required".into(),
        ));
    }
    let overrides: BTreeMap<String, f64> = overrides.into_iter().collect();

    let mut wanted: Vec<String> = match (&args.layers, args.ratio) {
        (Some(l), _) => l.clone(),
        (None, Some(_)) => model
            .manifest
            .layers
            .iter()
            .filter(|l| l.kind == LayerKind::Conv)
            .map(|l| l.name.clone())
            .collect(),
        (None, None) => Vec::new(),
    };
    wanted.extend(overrides.keys().cloned());

    for name in &wanted {
        let spec = model
            .manifest
            .layer(name)
            .ok_or_else(|| Error::UnknownLayer(name.clone()))?;
        if spec.kind != LayerKind::Conv {
            return Err(Error::LayerNotPrunable(name.clone()).into());
        }
    }
    let mut out = Vec::new();
    for spec in &model.manifest.layers {
        if !wanted.contains(&spec.name) {
            continue;
        }
        let p = overrides
            .get(&spec.name)
            .copied()
            .or(args.ratio)
            .ok_or_else(|| Failure::Usage(format!("no ratio given for layer {:?}", spec.name)))?;
        check_ratio(p).map_err(Error::from)?;
        out.push((spec.name.clone(), p));
    }
    Ok(out)
}

struct ScoredLayer {
    name: String,
    p: f64,
    scoring: LayerScoring,
}

fn score_layers(
    model: &Model,
    layers: &[(String, f64)],
    methods: &[Method],
) -> Result<Vec<Vec<ScoredLayer>>, Error> {
    // per layer: one similarity matrix shared by all methods
    let per_layer: Vec<Vec<ScoredLayer>> = layers
        .par_iter()
        .map(|(name, p)| -> Result<Vec<ScoredLayer>, Error> {
            let filters = model
                .filter_set(name)
                .ok_or_else(|| Error::MissingWeights(name.clone()))?;
            let w = layer_similarity(&filters)?;
            methods
                .iter()
                .map(|&m| {
                    Ok(ScoredLayer {
                        name: name.clone(),
                        p: *p,
                        scoring: score_with_similarity(&filters, &w, m, *p)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    // transpose to per method, keeping manifest order within each
    Ok((0..methods.len())
        .map(|mi| {
            per_layer
                .iter()
                .map(|l| {
                    let s = &l[mi];
                    ScoredLayer {
                        name: s.name.clone(),
                        p: s.p,
                        scoring: s.scoring.clone(),
                    }
                })
                .collect()
        })
        .collect())
}

fn plan_for(model: &Model, method: Method, scored: &[ScoredLayer]) -> Result<PruningPlan, Error> {
    let selections: BTreeMap<String, PruneSelection> = scored
        .iter()
        .map(|s| (s.name.clone(), s.scoring.selection.clone()))
        .collect();
    let mut plan = build_plan(&model.manifest, &selections)?;
    plan.method = Some(method);
    plan.p_by_layer = scored.iter().map(|s| (s.name.clone(), s.p)).collect();
    Ok(plan)
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn load(path: &Path) -> Result<(Model, Vec<u8>), Error> {
    Ok(Model::load(path)?)
}

fn cmd_score(args: &ScoreArgs) -> Result<Value, Failure> {
    let (model, bytes) = load(&args.manifest)?;
    let layers = resolve_layers(&model, &args.ratios)?;
    let scored = with_pool(args.threads, || score_layers(&model, &layers, &[args.method]))?;
    let scored = &scored[0];
    let plan = plan_for(&model, args.method, scored)?;

    let mut r = report::header(&bytes, "score");
    r.insert("method".into(), json!(args.method.as_str()));
    r.insert(
        "layers".into(),
        Value::Array(
            scored
                .iter()
                .map(|s| Value::Object(report::layer_block(&s.name, s.p, &s.scoring, args.emit_scores)))
                .collect(),
        ),
    );
    r.insert("cost".into(), report::cost_summary(&plan));
    Ok(Value::Object(r))
}

fn cmd_compare(args: &CompareArgs) -> Result<Value, Failure> {
    if args.methods.is_empty() {
        return Err(Failure::Usage("--methods must name at least one method".into()));
    }
    let (model, bytes) = load(&args.manifest)?;
    let layers = resolve_layers(&model, &args.ratios)?;
    let scored = with_pool(args.threads, || score_layers(&model, &layers, &args.methods))?;

    let mut blocks = Vec::with_capacity(args.methods.len());
    for (&method, layers) in args.methods.iter().zip(&scored) {
        let plan = plan_for(&model, method, layers)?;
        let layer_blocks = layers
            .iter()
            .map(|s| {
                let mut b = report::layer_block(&s.name, s.p, &s.scoring, args.emit_scores);
                b.insert("objective".into(), report::real(s.scoring.objective));
                if let Some(trace) = &s.scoring.cs_trace {
                    b.insert("cs_trace".into(), report::cs_trace(trace));
                }
                Value::Object(b)
            })
            .collect();
        blocks.push(json!({
            "method": method.as_str(),
            "layers": Value::Array(layer_blocks),
            "cost": report::cost_summary(&plan),
        }));
    }
    let mut r = report::header(&bytes, "compare");
    r.insert("methods".into(), Value::Array(blocks));
    Ok(Value::Object(r))
}

fn cmd_oracle(args: &OracleArgs) -> Result<Value, Failure> {
    let (model, bytes) = load(&args.manifest)?;
    let spec = model
        .manifest
        .layer(&args.layer)
        .ok_or_else(|| Error::UnknownLayer(args.layer.clone()))?;
    if spec.kind != LayerKind::Conv {
        return Err(Error::LayerNotPrunable(args.layer.clone()).into());
    }
    let filters = model
        .filter_set(&args.layer)
        .ok_or_else(|| Error::MissingWeights(args.layer.clone()))?;
    check_ratio(args.ratio).map_err(Error::from)?;
    let w = layer_similarity(&filters)?;
    let best = optimal_subset(&w, args.ratio, args.limit).map_err(Error::from)?;

    let mut heuristics = Vec::new();
    for m in [Method::Wdc, Method::Bc] {
        let s = score_with_similarity(&filters, &w, m, args.ratio)?;
        heuristics.push(json!({
            "method": m.as_str(),
            "keep": s.selection.keep,
            "objective": report::real(s.objective),
        }));
    }
    let mut r = report::header(&bytes, "oracle");
    r.insert("layer".into(), json!(args.layer));
    r.insert("n".into(), json!(filters.len()));
    r.insert("p".into(), report::real(args.ratio));
    r.insert("limit".into(), json!(args.limit));
    r.insert("oracle".into(), report::oracle_block(&best));
    r.insert("heuristics".into(), Value::Array(heuristics));
    Ok(Value::Object(r))
}

fn emit(report: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let text = report::render(report);
    match out {
        Some(path) => report::write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Score(a) => cmd_score(a).and_then(|r| emit(&r, a.out.as_deref())),
        Command::Compare(a) => cmd_compare(a).and_then(|r| emit(&r, a.out.as_deref())),
        Command::Oracle(a) => cmd_oracle(a).and_then(|r| emit(&r, a.out.as_deref())),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}
