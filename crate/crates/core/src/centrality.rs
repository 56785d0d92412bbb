//! Centrality scores over the filter similarity graph and the layer-wise
//! keep/prune split.
//!
//! Scores follow one convention for every method: a higher score means the
//! filter is more prunable.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::{DistanceMatrix, SimilarityMatrix};

/// Relative tolerance under which two path lengths count as equal.
pub const PATH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum RatioError {
    #[error("pruning ratio {0} is outside [0, 1]")]
    InvalidRatio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wdc,
    Bc,
    L1,
    Gm,
    Cs,
    Oracle,
}

impl Method {
    pub const SCORERS: [Method; 5] = [Method::Wdc, Method::Bc, Method::L1, Method::Gm, Method::Cs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Wdc => "wdc",
            Method::Bc => "bc",
            Method::L1 => "l1",
            Method::Gm => "gm",
            Method::Cs => "cs",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wdc" => Ok(Method::Wdc),
            "bc" => Ok(Method::Bc),
            "l1" => Ok(Method::L1),
            "gm" => Ok(Method::Gm),
            "cs" => Ok(Method::Cs),
            "oracle" => Ok(Method::Oracle),
            _ => Err(format!("unknown method {s:?} (expected wdc, bc, l1, gm or cs)")),
        }
    }
}

/// Per-filter scores of one layer. `+inf` marks all-zero filters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub method: Method,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Disjoint, ascending keep and prune index sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PruneSelection {
    pub keep: Vec<usize>,
    pub prune: Vec<usize>,
}

impl PruneSelection {
    pub fn n(&self) -> usize {
        self.keep.len() + self.prune.len()
    }

    /// Selection that prunes exactly `prune` (any order) out of `n`.
    pub fn from_pruned(n: usize, prune: &[usize]) -> Self {
        let mut mask = vec![false; n];
        for &i in prune {
            mask[i] = true;
        }
        PruneSelection {
            keep: (0..n).filter(|&i| !mask[i]).collect(),
            prune: (0..n).filter(|&i| mask[i]).collect(),
        }
    }
}

pub fn check_ratio(p: f64) -> Result<(), RatioError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(RatioError::InvalidRatio(p))
    }
}

/// `⌈(1 − p)·n⌉`, the number of filters kept at ratio `p`.
///
/// Products within 1e-9 of an integer snap to it, so that e.g. `p = 1/3`
/// on three filters keeps two rather than three.
pub fn keep_count(n: usize, p: f64) -> Result<usize, RatioError> {
    check_ratio(p)?;
    let x = (1.0 - p) * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    Ok((k as usize).min(n))
}

/// Weighted degree: `C(v) = Σ_{u≠v} W[u][v]`.
pub fn wdc_scores(w: &SimilarityMatrix) -> ScoreVector {
    let n = w.n();
    let scores = (0..n)
        .map(|v| {
            if w.is_zero(v) {
                return f64::INFINITY;
            }
            (0..n).filter(|&u| u != v).map(|u| w.get(u, v)).sum()
        })
        .collect();
    ScoreVector {
        method: Method::Wdc,
        scores,
    }
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= PATH_TOLERANCE * a.abs().max(b.abs())
}

/// Single-source pass of Brandes' algorithm on the complete graph.
/// Returns each node's dependency on `source`.
fn source_dependencies(d: &DistanceMatrix, source: usize) -> Vec<f64> {
    let n = d.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    dist[source] = 0.0;
    sigma[source] = 1.0;

    // dense Dijkstra: O(n²) per source on a complete graph
    loop {
        let next = (0..n)
            .filter(|&v| !settled[v] && dist[v].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let Some(v) = next else { break };
        settled[v] = true;
        order.push(v);
        for u in 0..n {
            if settled[u] {
                continue;
            }
            let alt = dist[v] + d.get(v, u);
            if dist[u].is_finite() && same_length(alt, dist[u]) {
                sigma[u] += sigma[v];
                preds[u].push(v);
            } else if alt < dist[u] {
                dist[u] = alt;
                sigma[u] = sigma[v];
                preds[u].clear();
                preds[u].push(v);
            }
        }
    }

    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
    }
    delta[source] = 0.0;
    delta
}

/// Betweenness: `C(v) = Σ_{s<t, s,t≠v} σ(s,t|v) / σ(s,t)` with weighted
/// shortest paths over `d`. Unnormalized; each unordered pair counts once.
pub fn bc_scores(d: &DistanceMatrix) -> ScoreVector {
    let n = d.n();
    let per_source: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| source_dependencies(d, s))
        .collect();
    // fixed-order reduction keeps results independent of the thread count
    let mut scores = vec![0.0f64; n];
    for deps in &per_source {
        for (acc, x) in scores.iter_mut().zip(deps) {
            *acc += x;
        }
    }
    for (v, s) in scores.iter_mut().enumerate() {
        *s = if d.is_zero(v) { f64::INFINITY } else { *s / 2.0 };
    }
    ScoreVector {
        method: Method::Bc,
        scores,
    }
}

/// Indices ordered from most to least prunable; ties put the higher index first.
pub fn prune_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(b.cmp(&a)));
    idx
}

/// Prunes the `n − ⌈(1−p)n⌉` highest-scoring filters.
pub fn rank_filters(scores: &ScoreVector, p: f64) -> Result<PruneSelection, RatioError> {
    let n = scores.len();
    let keep = keep_count(n, p)?;
    let order = prune_order(&scores.scores);
    Ok(PruneSelection::from_pruned(n, &order[..n - keep]))
}
