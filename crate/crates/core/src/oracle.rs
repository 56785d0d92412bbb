//! Exhaustive search for the keep-set with the least retained similarity.
//!
//! Cost is `C(n, k)` subsets, so this is a test instrument for small layers.

use thiserror::Error;

use crate::centrality::{keep_count, RatioError};
use crate::similarity::SimilarityMatrix;

pub const DEFAULT_LIMIT: usize = 20;
/// Objectives closer than this are treated as equal.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("layer has {n} filters, above the exhaustive-search limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Ratio(#[from] RatioError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub keep: Vec<usize>,
    pub objective: f64,
    pub subsets_examined: u64,
}

/// `Σ W[i][j]` over unordered pairs `i < j` of `keep`.
pub fn retained_similarity(w: &SimilarityMatrix, keep: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, &i) in keep.iter().enumerate() {
        for &j in &keep[a + 1..] {
            total += w.get(i, j);
        }
    }
    total
}

/// Binomial coefficient.
pub fn choose(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

struct Search<'a> {
    w: &'a SimilarityMatrix,
    k: usize,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    examined: u64,
}

impl Search<'_> {
    fn descend(&mut self, start: usize, partial: f64) {
        if self.chosen.len() == self.k {
            self.examined += 1;
            let better = match &self.best {
                None => true,
                Some((b, _)) => partial < b - OBJECTIVE_TOLERANCE,
            };
            if better {
                self.best = Some((partial, self.chosen.clone()));
            }
            return;
        }
        let n = self.w.n();
        let last = n - (self.k - self.chosen.len());
        for i in start..=last {
            let added: f64 = self.chosen.iter().map(|&c| self.w.get(c, i)).sum();
            self.chosen.push(i);
            self.descend(i + 1, partial + added);
            self.chosen.pop();
        }
    }
}

/// Finds the size-`⌈(1−p)n⌉` keep-set minimizing [`retained_similarity`].
/// Subsets are visited in lexicographic order and only a strictly better
/// objective replaces the incumbent, so ties resolve to the lexicographically
/// smallest set.
pub fn optimal_subset(
    w: &SimilarityMatrix,
    p: f64,
    limit: usize,
) -> Result<OracleResult, OracleError> {
    let n = w.n();
    let k = keep_count(n, p)?;
    if n > limit {
        return Err(OracleError::TooLarge { n, limit });
    }
    let mut search = Search {
        w,
        k,
        chosen: Vec::with_capacity(k),
        best: None,
        examined: 0,
    };
    search.descend(0, 0.0);
    let (objective, keep) = search.best.expect("at least one subset");
    Ok(OracleResult {
        keep,
        objective,
        subsets_examined: search.examined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_pruning_keeps_all() {
        let w = SimilarityMatrix::from_dense(3, &[1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0]);
        let r = optimal_subset(&w, 0.0, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.keep, vec![0, 1, 2]);
        assert!((r.objective - 1.2).abs() < 1e-12);
        assert_eq!(r.subsets_examined, 1);
    }

    #[test]
    fn three_filters_keep_two() {
        let w = SimilarityMatrix::from_dense(3, &[1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0]);
        let r = optimal_subset(&w, 1.0 / 3.0, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.keep, vec![0, 2]);
        assert!((r.objective - 0.1).abs() < 1e-12);
        assert_eq!(r.subsets_examined, 3);
    }

    #[test]
    fn hub_filter_dropped() {
        let w = SimilarityMatrix::from_upper(4, vec![false; 4], |_, j| if j == 3 { 0.95 } else { 0.1 });
        let r = optimal_subset(&w, 0.25, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.keep, vec![0, 1, 2]);
        assert_eq!(r.subsets_examined, 4);
    }

    #[test]
    fn ties_take_lexicographically_smallest() {
        let w = SimilarityMatrix::from_upper(5, vec![false; 5], |_, _| 0.5);
        let r = optimal_subset(&w, 0.4, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.keep, vec![0, 1, 2]);
        assert_eq!(r.subsets_examined, 10);
    }

    #[test]
    fn limit_and_ratio_errors() {
        let w = SimilarityMatrix::from_upper(21, vec![false; 21], |_, _| 0.5);
        assert_eq!(
            optimal_subset(&w, 0.5, DEFAULT_LIMIT),
            Err(OracleError::TooLarge { n: 21, limit: 20 })
        );
        assert!(matches!(optimal_subset(&w, -0.1, 30), Err(OracleError::Ratio(_))));
    }

    #[test]
    fn full_ratio_keeps_nothing() {
        let w = SimilarityMatrix::from_upper(4, vec![false; 4], |_, _| 0.5);
        let r = optimal_subset(&w, 1.0, DEFAULT_LIMIT).unwrap();
        assert!(r.keep.is_empty());
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn binomials() {
        assert_eq!(choose(20, 10), 184_756);
        assert_eq!(choose(4, 3), 4);
        assert_eq!(choose(3, 5), 0);
    }
}
