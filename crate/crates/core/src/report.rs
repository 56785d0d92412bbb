//! JSON reports.
//!
//! Keys appear in a fixed order and reals are written with 17 significant
//! digits, so identical inputs give byte-identical files. Infinite scores
//! (all-zero filters) are written as the string `"inf"`.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::baselines::CsStep;
use crate::centrality::PruneSelection;
use crate::oracle::OracleResult;
use crate::pipeline::LayerScoring;
use crate::planner::{reduction_pct, LayerCost, PruningPlan};
use crate::Error;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A real with 17 significant digits.
pub fn real(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(if x > 0.0 { "inf" } else if x < 0.0 { "-inf" } else { "nan" }.into());
    }
    // Number keeps the literal text under arbitrary_precision
    Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number"))
}

fn percent(x: f64) -> Value {
    Value::Number(Number::from_str(&format!("{x:.2}")).expect("fixed-point JSON number"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Common leading fields of every report.
pub fn header(manifest_bytes: &[u8], command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool_version".into(), json!(TOOL_VERSION));
    m.insert("manifest_digest".into(), json!(sha256_hex(manifest_bytes)));
    m.insert("command".into(), json!(command));
    m
}

pub fn cost(c: LayerCost) -> Value {
    json!({ "params": c.params, "macs": c.macs })
}

pub fn cost_summary(plan: &PruningPlan) -> Value {
    json!({
        "before": cost(plan.before),
        "after": cost(plan.after),
        "params_reduction_pct": percent(reduction_pct(plan.before.params, plan.after.params)),
        "macs_reduction_pct": percent(reduction_pct(plan.before.macs, plan.after.macs)),
    })
}

fn selection_fields(m: &mut Map<String, Value>, sel: &PruneSelection) {
    m.insert("keep".into(), json!(sel.keep));
    m.insert("prune".into(), json!(sel.prune));
}

/// One per-layer block: `layer`, `n`, `p`, optional `scores`, `keep`, `prune`.
pub fn layer_block(name: &str, p: f64, scoring: &LayerScoring, emit_scores: bool) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("layer".into(), json!(name));
    m.insert("n".into(), json!(scoring.selection.n()));
    m.insert("p".into(), real(p));
    if emit_scores {
        if let Some(s) = &scoring.scores {
            m.insert("scores".into(), Value::Array(s.scores.iter().map(|&x| real(x)).collect()));
        }
    }
    selection_fields(&mut m, &scoring.selection);
    m
}

pub fn cs_trace(trace: &[CsStep]) -> Value {
    Value::Array(
        trace
            .iter()
            .map(|s| {
                json!({
                    "pair": s.pair.map(|(i, j)| vec![i, j]),
                    "similarity": real(s.similarity),
                    "pruned": s.pruned,
                })
            })
            .collect(),
    )
}

pub fn oracle_block(r: &OracleResult) -> Value {
    json!({
        "keep": r.keep,
        "objective": real(r.objective),
        "subsets_examined": r.subsets_examined,
    })
}

/// Pretty-printed report text with a trailing newline.
pub fn render(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Writes via a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let wrap = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(contents.as_bytes()).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}
