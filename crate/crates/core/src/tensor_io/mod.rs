//! Weight tensors and model manifests.

mod manifest;
mod npy;

pub use manifest::{load_manifest, LayerKind, LayerSpec, ManifestError, Model, ModelManifest};
pub use npy::{parse_npy, write_npy, Dtype, MAGIC};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} holds {expected} values but {actual} were given")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Error)]
pub enum NpyError {
    #[error("not an npy file (bad magic)")]
    BadMagic,
    #[error("unsupported npy version {0}.{1}")]
    UnsupportedVersion(u8, u8),
    #[error("file truncated inside the header")]
    Truncated,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported dtype {0:?}; only '<f4' and '<f8' are accepted")]
    UnsupportedDtype(String),
    #[error("fortran-order arrays are not supported")]
    FortranOrderUnsupported,
    #[error("payload is {actual} bytes but the header declares {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("non-finite value at flat index {index}")]
    NonFiniteValue { index: usize },
}

/// Raw element storage. The on-disk precision is kept so that writing a
/// parsed tensor back out is lossless.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dense row-major array of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::ShapeMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        let bad = match &data {
            TensorData::F32(v) => v.iter().position(|x| !x.is_finite()),
            TensorData::F64(v) => v.iter().position(|x| !x.is_finite()),
        };
        if let Some(index) = bad {
            return Err(TensorError::NonFinite { index });
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_f64(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        Self::new(shape, TensorData::F64(data))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn dtype(&self) -> Dtype {
        match self.data {
            TensorData::F32(_) => Dtype::F32,
            TensorData::F64(_) => Dtype::F64,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Values widened to `f64`, in storage order.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }
}

/// One convolutional layer's filters, laid out as `(n, kernel_h, kernel_w, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSet {
    n: usize,
    kernel_h: usize,
    kernel_w: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FilterSet {
    pub fn new(
        n: usize,
        kernel_h: usize,
        kernel_w: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, TensorError> {
        let shape = vec![n, kernel_h, kernel_w, channels];
        let tensor = Tensor::from_f64(shape, data)?;
        Ok(Self::from_tensor_unchecked(&tensor))
    }

    /// Interprets a rank-4 tensor as a filter set. Returns `None` for other ranks.
    pub fn from_tensor(tensor: &Tensor) -> Option<Self> {
        (tensor.shape().len() == 4).then(|| Self::from_tensor_unchecked(tensor))
    }

    fn from_tensor_unchecked(tensor: &Tensor) -> Self {
        let s = tensor.shape();
        FilterSet {
            n: s[0],
            kernel_h: s[1],
            kernel_w: s[2],
            channels: s[3],
            data: tensor.to_f64(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kernel_h(&self) -> usize {
        self.kernel_h
    }

    pub fn kernel_w(&self) -> usize {
        self.kernel_w
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn filter_len(&self) -> usize {
        self.kernel_h * self.kernel_w * self.channels
    }

    /// The `i`-th filter as a flat `(kernel_h, kernel_w, c)` slice.
    pub fn filter(&self, i: usize) -> &[f64] {
        let len = self.filter_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn filters(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.filter_len())
    }

    /// Multiplies filter `i` by `factor` in place.
    pub fn scale_filter(&mut self, i: usize, factor: f64) {
        let len = self.filter_len();
        self.data[i * len..(i + 1) * len]
            .iter_mut()
            .for_each(|x| *x *= factor);
    }

    /// A new filter set holding the filters at `order`, in that order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let data = order.iter().flat_map(|&i| self.filter(i).iter().copied()).collect();
        FilterSet {
            n: order.len(),
            data,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_rejects_wrong_length_and_nonfinite() {
        assert!(matches!(
            Tensor::from_f64(vec![2, 2], vec![0.0; 3]),
            Err(TensorError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            Tensor::from_f64(vec![2], vec![0.0, f64::INFINITY]),
            Err(TensorError::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn filter_slices() {
        let data: Vec<f64> = (0..24).map(f64::from).collect();
        let fs = FilterSet::new(2, 2, 3, 2, data).unwrap();
        assert_eq!(fs.filter_len(), 12);
        assert_eq!(fs.filter(1)[0], 12.0);
        let p = fs.permuted(&[1, 0]);
        assert_eq!(p.filter(0), fs.filter(1));
    }
}
