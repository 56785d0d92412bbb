//! Pairwise filter similarity and the distance transform used for
//! shortest paths.

use thiserror::Error;

use crate::representatives::Representative;

/// Smallest off-diagonal distance; identical filters would otherwise be
/// joined by zero-length edges.
pub const DISTANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("representative {index} has length {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("at least one representative is required")]
    Empty,
}

/// Symmetric `n × n` matrix of absolute cosine similarities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    w: Vec<f64>,
    zero: Vec<bool>,
}

impl SimilarityMatrix {
    /// Builds a matrix from explicit entries, mirroring the upper triangle.
    /// The diagonal is set from `zero`. Panics on entries outside `[0, 1]`.
    pub fn from_upper(n: usize, zero: Vec<bool>, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        assert_eq!(zero.len(), n);
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = if zero[i] { 0.0 } else { 1.0 };
            for j in i + 1..n {
                let v = if zero[i] || zero[j] { 0.0 } else { entry(i, j) };
                assert!((0.0..=1.0).contains(&v), "similarity {v} outside [0, 1]");
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        SimilarityMatrix { n, w, zero }
    }

    /// Matrix with no zero-flagged filters from a dense row-major array.
    /// Only the upper triangle is read.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n);
        Self::from_upper(n, vec![false; n], |i, j| dense[i * n + j])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn is_zero(&self, i: usize) -> bool {
        self.zero[i]
    }

    pub fn zero_flags(&self) -> &[bool] {
        &self.zero
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn to_distance(&self) -> DistanceMatrix {
        to_distance(self)
    }
}

/// `d = max(1 − w, floor)` off the diagonal, 0 on it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
    zero: Vec<bool>,
}

impl DistanceMatrix {
    /// Explicit distances; only the upper triangle of `dense` is read.
    /// Panics unless every off-diagonal entry is strictly positive and finite.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n);
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = dense[i * n + j];
                assert!(v > 0.0 && v.is_finite(), "distance {v} must be positive");
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceMatrix {
            n,
            d,
            zero: vec![false; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn is_zero(&self, i: usize) -> bool {
        self.zero[i]
    }
}

/// `W[i][j] = |cos(f_i, f_j)|`, or 0 when either filter is all-zero.
pub fn similarity_matrix(reps: &[Representative]) -> Result<SimilarityMatrix, SimilarityError> {
    let first = reps.first().ok_or(SimilarityError::Empty)?;
    let len = first.vector.len();
    if let Some((index, r)) = reps.iter().enumerate().find(|(_, r)| r.vector.len() != len) {
        return Err(SimilarityError::DimensionMismatch {
            index,
            expected: len,
            found: r.vector.len(),
        });
    }
    let zero = reps.iter().map(|r| r.is_zero).collect();
    Ok(SimilarityMatrix::from_upper(reps.len(), zero, |i, j| {
        abs_cosine(&reps[i].vector, &reps[j].vector)
    }))
}

fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot.abs() / (na * nb)).min(1.0)
}

pub fn to_distance(w: &SimilarityMatrix) -> DistanceMatrix {
    let n = w.n;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i * n + j] = (1.0 - w.get(i, j)).max(DISTANCE_FLOOR);
            }
        }
    }
    DistanceMatrix {
        n,
        d,
        zero: w.zero.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(v: &[f64]) -> Representative {
        Representative {
            vector: v.to_vec(),
            is_zero: false,
        }
    }

    #[test]
    fn identical_orthogonal_and_diagonal() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = similarity_matrix(&[rep(&[1.0, 0.0]), rep(&[1.0, 0.0]), rep(&[0.0, 1.0]), rep(&[s, s])])
            .unwrap();
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(0, 2), 0.0);
        assert!((w.get(0, 3) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(w.get(3, 0), w.get(0, 3));
        assert!((0..4).all(|i| w.get(i, i) == 1.0));
    }

    #[test]
    fn antiparallel_is_fully_similar() {
        let w = similarity_matrix(&[rep(&[0.6, 0.8]), rep(&[-0.6, -0.8])]).unwrap();
        assert_eq!(w.get(0, 1), 1.0);
    }

    #[test]
    fn zero_flag_zeroes_row_and_diagonal() {
        let z = Representative {
            vector: vec![0.0, 0.0],
            is_zero: true,
        };
        let w = similarity_matrix(&[rep(&[1.0, 0.0]), z]).unwrap();
        assert_eq!(w.get(1, 1), 0.0);
        assert_eq!(w.get(0, 1), 0.0);
        assert!(w.is_zero(1));
    }

    #[test]
    fn mismatched_lengths() {
        assert_eq!(
            similarity_matrix(&[rep(&[1.0, 0.0]), rep(&[1.0])]),
            Err(SimilarityError::DimensionMismatch {
                index: 1,
                expected: 2,
                found: 1
            })
        );
        assert_eq!(similarity_matrix(&[]), Err(SimilarityError::Empty));
    }

    #[test]
    fn distance_transform() {
        let w = SimilarityMatrix::from_dense(3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.7, 1.0, 0.7, 1.0]);
        let d = to_distance(&w);
        assert_eq!(d.get(0, 1), 1.0);
        assert_eq!(d.get(0, 2), 1e-9);
        assert!((d.get(1, 2) - 0.3).abs() < 1e-12);
        assert_eq!(d.get(2, 2), 0.0);
    }
}
