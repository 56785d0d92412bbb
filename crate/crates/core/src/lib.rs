//! Data-free structured filter pruning driven by graph centrality.
//!
//! Each convolutional filter is summarized by the leading left singular
//! vector of its `(w·h) × c` reshaping. Absolute cosine similarities between
//! these representatives form a complete weighted graph; filters with high
//! weighted degree or betweenness are the most redundant and are pruned
//! first. Baseline scorers (ℓ1 norm, geometric median, greedy pairwise
//! similarity) and an exhaustive subset oracle are provided for comparison,
//! along with parameter/MAC accounting for the pruned model.

pub mod baselines;
pub mod centrality;
pub mod cli;
pub mod oracle;
pub mod pipeline;
pub mod planner;
pub mod report;
pub mod representatives;
pub mod similarity;
pub mod tensor_io;

pub use centrality::{Method, PruneSelection, ScoreVector};
pub use tensor_io::{FilterSet, Tensor};

use thiserror::Error;

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Npy(#[from] tensor_io::NpyError),
    #[error(transparent)]
    Manifest(#[from] tensor_io::ManifestError),
    #[error(transparent)]
    Svd(#[from] representatives::SvdError),
    #[error(transparent)]
    Similarity(#[from] similarity::SimilarityError),
    #[error(transparent)]
    Ratio(#[from] centrality::RatioError),
    #[error(transparent)]
    Baseline(#[from] baselines::BaselineError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Plan(#[from] planner::PlanError),
    #[error("unknown layer {0:?}")]
    UnknownLayer(String),
    #[error("layer {0:?} not prunable: only conv layers can be scored")]
    LayerNotPrunable(String),
    #[error("layer {0:?} has no weights loaded")]
    MissingWeights(String),
    #[error("cannot write {path:?}: {source}")]
    Write {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}
