//! Rank-1 filter representatives.
//!
//! Each `(w, h, c)` filter is reshaped into a `(w·h) × c` matrix whose best
//! rank-1 approximation `σ₁ l₁ r₁ᵀ` has every column parallel to `l₁`. The
//! unit vector `l₁`, with its largest-magnitude entry made positive, is the
//! filter's representative.

use thiserror::Error;

use crate::tensor_io::FilterSet;

/// Iteration cap for the power method.
pub const MAX_ITERATIONS: usize = 10_000;
/// Relative change in `σ₁` between sweeps that counts as converged.
pub const SIGMA_TOLERANCE: f64 = 1e-12;
/// Max-norm change of the iterated singular vector that counts as converged.
pub const VECTOR_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Error, PartialEq)]
pub enum SvdError {
    #[error("matrix is all zeros")]
    ZeroMatrix,
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self · x`
    fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `selfᵀ · y`
    fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += m * yr;
            }
        }
        out
    }
}

/// `F^flat` for one filter: entry `((i−1)h + j, k)` is `F[i, j, k]`.
///
/// `filter` is a row-major `(w, h, c)` slice, so the flattening is the
/// identity on memory.
pub fn flatten_filter(filter: &[f64], w: usize, h: usize, c: usize) -> Matrix {
    assert_eq!(filter.len(), w * h * c, "filter length");
    let mut data = vec![0.0; w * h * c];
    for i in 0..w {
        for j in 0..h {
            for k in 0..c {
                data[(i * h + j) * c + k] = filter[(i * h + j) * c + k];
            }
        }
    }
    Matrix::new(w * h, c, data)
}

/// Leading singular value and unit singular vectors of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

type MatVec = fn(&Matrix, &[f64]) -> Vec<f64>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(v: &mut [f64], by: f64) {
    v.iter_mut().for_each(|x| *x /= by);
}

/// Index of the entry with the largest magnitude; ties go to the lowest index.
fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Computes `(σ₁, l₁, r₁)` by alternating power iteration.
///
/// The matrix is first divided by its largest absolute entry, then the
/// iteration runs over the shorter side starting from the all-ones vector.
/// `l₁` is returned with its largest-magnitude entry positive.
pub fn leading_singular_triplet(m: &Matrix) -> Result<SingularTriplet, SvdError> {
    let peak = m.data.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if peak == 0.0 {
        return Err(SvdError::ZeroMatrix);
    }
    let scaled = Matrix::new(m.rows, m.cols, m.data.iter().map(|x| x / peak).collect());

    // A "forward" step maps the iterated side to the other side.
    let iterate_left = m.rows <= m.cols;
    let (fwd, back): (MatVec, MatVec) =
        if iterate_left {
            (Matrix::tmul_vec, Matrix::mul_vec)
        } else {
            (Matrix::mul_vec, Matrix::tmul_vec)
        };
    let dim = if iterate_left { m.rows } else { m.cols };

    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut y = fwd(&scaled, &x);
    if norm(&y) == 0.0 {
        // the all-ones start lies in the null space; restart from the
        // largest row (or column) of the matrix
        x = largest_line(&scaled, iterate_left);
        y = fwd(&scaled, &x);
    }

    let mut sigma_prev = f64::NAN;
    let mut sigma_settled = false;
    for _ in 0..MAX_ITERATIONS {
        let ny = norm(&y);
        scale(&mut y, ny);
        let mut next = back(&scaled, &y);
        let sigma = norm(&next);
        scale(&mut next, sigma);

        let change = x
            .iter()
            .zip(&next)
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        sigma_settled = (sigma - sigma_prev).abs() <= SIGMA_TOLERANCE * sigma;
        x = next;
        sigma_prev = sigma;
        if sigma_settled && change <= VECTOR_TOLERANCE {
            break;
        }
        y = fwd(&scaled, &x);
    }
    if !sigma_settled {
        return Err(SvdError::NoConvergence(MAX_ITERATIONS));
    }

    let (mut left, mut right) = if iterate_left {
        let mut r = scaled.tmul_vec(&x);
        let nr = norm(&r);
        scale(&mut r, nr);
        (x, r)
    } else {
        let mut l = scaled.mul_vec(&x);
        let nl = norm(&l);
        scale(&mut l, nl);
        (l, x)
    };
    if left[argmax_abs(&left)] < 0.0 {
        left.iter_mut().for_each(|v| *v = -*v);
        right.iter_mut().for_each(|v| *v = -*v);
    }
    let sigma = dot(&left, &scaled.mul_vec(&right)) * peak;
    Ok(SingularTriplet { sigma, left, right })
}

fn largest_line(m: &Matrix, rows: bool) -> Vec<f64> {
    // rows of M live in the column space of Mᵀ and vice versa
    let lines: Vec<Vec<f64>> = if rows {
        (0..m.cols)
            .map(|c| (0..m.rows).map(|r| m.get(r, c)).collect())
            .collect()
    } else {
        (0..m.rows).map(|r| m.row(r).to_vec()).collect()
    };
    let mut best = lines
        .iter()
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .cloned()
        .expect("nonempty matrix");
    let n = norm(&best);
    scale(&mut best, n);
    best
}

/// Unit-norm summary of one filter, or a zero flag for an all-zero filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Representative {
    pub vector: Vec<f64>,
    pub is_zero: bool,
}

/// Representative of a single `(w, h, c)` filter.
pub fn representative(
    filter: &[f64],
    w: usize,
    h: usize,
    c: usize,
) -> Result<Representative, SvdError> {
    let flat = flatten_filter(filter, w, h, c);
    match leading_singular_triplet(&flat) {
        Ok(t) => Ok(Representative {
            vector: t.left,
            is_zero: false,
        }),
        Err(SvdError::ZeroMatrix) => Ok(Representative {
            vector: vec![0.0; w * h],
            is_zero: true,
        }),
        Err(e) => Err(e),
    }
}

/// Representatives for every filter of a layer, in filter order.
pub fn layer_representatives(filters: &FilterSet) -> Result<Vec<Representative>, SvdError> {
    filters
        .filters()
        .map(|f| representative(f, filters.kernel_h(), filters.kernel_w(), filters.channels()))
        .collect()
}
