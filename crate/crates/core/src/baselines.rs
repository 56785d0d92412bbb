//! Passive baseline scorers: ℓ1-norm, geometric-median distance, and greedy
//! pairwise-similarity pruning.

use thiserror::Error;

use crate::centrality::{keep_count, Method, PruneSelection, RatioError, ScoreVector};
use crate::similarity::SimilarityMatrix;
use crate::tensor_io::FilterSet;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("geometric-median scoring needs at least 2 filters, got {0}")]
    TooFewFilters(usize),
    #[error("{expected} filters but {found} l1 norms")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Ratio(#[from] RatioError),
}

/// `Σ|F_i|` for every filter.
pub fn l1_norms(filters: &FilterSet) -> Vec<f64> {
    filters
        .filters()
        .map(|f| f.iter().map(|x| x.abs()).sum())
        .collect()
}

/// Negated ℓ1 norms: the smallest-norm filter is the most prunable.
pub fn l1_scores(filters: &FilterSet) -> ScoreVector {
    ScoreVector {
        method: Method::L1,
        scores: l1_norms(filters).into_iter().map(|s| 0.0 - s).collect(),
    }
}

/// Negated sum of Euclidean distances to every other filter. Filters near
/// the geometric median of the layer have the smallest sums.
pub fn gm_scores(filters: &FilterSet) -> Result<ScoreVector, BaselineError> {
    let n = filters.len();
    if n < 2 {
        return Err(BaselineError::TooFewFilters(n));
    }
    let mut sums = vec![0.0f64; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = filters
                .filter(i)
                .iter()
                .zip(filters.filter(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            sums[i] += d;
            sums[j] += d;
        }
    }
    Ok(ScoreVector {
        method: Method::Gm,
        scores: sums.into_iter().map(|s| 0.0 - s).collect(),
    })
}

/// One step of the greedy pairwise-similarity loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CsStep {
    /// The most similar remaining pair, `None` once fewer than two filters remain.
    pub pair: Option<(usize, usize)>,
    pub similarity: f64,
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsOutcome {
    pub selection: PruneSelection,
    pub trace: Vec<CsStep>,
}

/// Greedy pairwise-similarity pruning.
///
/// Repeatedly takes the most similar pair of surviving filters (ties: lowest
/// `i`, then lowest `j`) and drops the member with the smaller ℓ1 norm
/// (ties: higher index). When a single survivor is left and the budget still
/// demands a prune, it is removed directly.
pub fn cs_prune(w: &SimilarityMatrix, l1norms: &[f64], p: f64) -> Result<CsOutcome, BaselineError> {
    let n = w.n();
    if l1norms.len() != n {
        return Err(BaselineError::LengthMismatch {
            expected: n,
            found: l1norms.len(),
        });
    }
    let target = n - keep_count(n, p)?;
    let mut alive = vec![true; n];
    let mut pruned = Vec::with_capacity(target);
    let mut trace = Vec::with_capacity(target);

    while pruned.len() < target {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            for j in (i + 1..n).filter(|&j| alive[j]) {
                let s = w.get(i, j);
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((i, j, s));
                }
            }
        }
        let step = match best {
            Some((i, j, s)) => {
                let victim = if l1norms[i] < l1norms[j] { i } else { j };
                CsStep {
                    pair: Some((i, j)),
                    similarity: s,
                    pruned: victim,
                }
            }
            None => {
                let last = (0..n).find(|&i| alive[i]).expect("budget never exceeds n");
                CsStep {
                    pair: None,
                    similarity: 0.0,
                    pruned: last,
                }
            }
        };
        alive[step.pruned] = false;
        pruned.push(step.pruned);
        trace.push(step);
    }
    Ok(CsOutcome {
        selection: PruneSelection::from_pruned(n, &pruned),
        trace,
    })
}
