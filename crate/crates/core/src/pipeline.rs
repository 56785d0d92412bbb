//! Scoring one layer end to end: representatives, similarity graph, scores
//! and the resulting keep/prune split.

use crate::baselines::{cs_prune, gm_scores, l1_norms, l1_scores, CsStep};
use crate::centrality::{bc_scores, rank_filters, wdc_scores, Method, PruneSelection, ScoreVector};
use crate::oracle::{optimal_subset, retained_similarity};
use crate::representatives::layer_representatives;
use crate::similarity::{similarity_matrix, SimilarityMatrix};
use crate::tensor_io::FilterSet;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerScoring {
    pub method: Method,
    /// Absent for the greedy pairwise-similarity method, which does not score.
    pub scores: Option<ScoreVector>,
    pub selection: PruneSelection,
    pub cs_trace: Option<Vec<CsStep>>,
    /// Retained pairwise similarity of the keep-set.
    pub objective: f64,
}

pub fn layer_similarity(filters: &FilterSet) -> Result<SimilarityMatrix, Error> {
    let reps = layer_representatives(filters)?;
    Ok(similarity_matrix(&reps)?)
}

/// Scores a layer with `method` and splits it at ratio `p`.
pub fn score_layer(filters: &FilterSet, method: Method, p: f64) -> Result<LayerScoring, Error> {
    let w = layer_similarity(filters)?;
    score_with_similarity(filters, &w, method, p)
}

/// As [`score_layer`] with a precomputed similarity matrix for `filters`.
pub fn score_with_similarity(
    filters: &FilterSet,
    w: &SimilarityMatrix,
    method: Method,
    p: f64,
) -> Result<LayerScoring, Error> {
    let ranked = |scores: ScoreVector| -> Result<LayerScoring, Error> {
        let selection = rank_filters(&scores, p)?;
        Ok(LayerScoring {
            method,
            objective: retained_similarity(w, &selection.keep),
            scores: Some(scores),
            selection,
            cs_trace: None,
        })
    };
    match method {
        Method::Wdc => ranked(wdc_scores(w)),
        Method::Bc => ranked(bc_scores(&w.to_distance())),
        Method::L1 => ranked(l1_scores(filters)),
        Method::Gm => ranked(gm_scores(filters)?),
        Method::Cs => {
            let out = cs_prune(w, &l1_norms(filters), p)?;
            Ok(LayerScoring {
                method,
                scores: None,
                objective: retained_similarity(w, &out.selection.keep),
                selection: out.selection,
                cs_trace: Some(out.trace),
            })
        }
        Method::Oracle => {
            let r = optimal_subset(w, p, crate::oracle::DEFAULT_LIMIT)?;
            let prune: Vec<usize> = (0..w.n()).filter(|i| !r.keep.contains(i)).collect();
            Ok(LayerScoring {
                method,
                scores: None,
                selection: PruneSelection::from_pruned(w.n(), &prune),
                cs_trace: None,
                objective: r.objective,
            })
        }
    }
}
