use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_npy, FilterSet, NpyError, Tensor};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest schema error: {0}")]
    Schema(String),
    #[error("layer {layer:?} names unknown next_layer {target:?}")]
    DanglingReference { layer: String, target: String },
    #[error("layer {layer:?}: {detail}")]
    ShapeConflict { layer: String, detail: String },
    #[error("cannot read weights {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("weights {path:?}: {source}")]
    Npy {
        path: PathBuf,
        #[source]
        source: NpyError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    FullyConnected,
}

/// One layer as declared in the manifest. For fully connected layers `n` is
/// the output width and `c` the input width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub n: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub c: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub has_bias: bool,
    pub weights_path: String,
    #[serde(default)]
    pub next_layer: Option<String>,
    #[serde(default)]
    pub flatten_factor: Option<usize>,
}

impl LayerSpec {
    /// Input channels the successor loses per pruned filter of this layer.
    pub fn coupling_factor(&self) -> usize {
        self.flatten_factor.unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub layers: Vec<LayerSpec>,
}

impl ModelManifest {
    pub fn layer(&self, name: &str) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// The layer whose `next_layer` points at `name`, if any.
    pub fn predecessor(&self, name: &str) -> Option<&LayerSpec> {
        self.layers
            .iter()
            .find(|l| l.next_layer.as_deref() == Some(name))
    }

    /// Checks structural invariants that do not need weight files.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut index = HashMap::new();
        for (i, l) in self.layers.iter().enumerate() {
            if index.insert(l.name.as_str(), i).is_some() {
                return Err(ManifestError::Schema(format!("duplicate layer name {:?}", l.name)));
            }
            let dims = [
                ("n", l.n),
                ("kernel_h", l.kernel_h),
                ("kernel_w", l.kernel_w),
                ("c", l.c),
                ("out_h", l.out_h),
                ("out_w", l.out_w),
            ];
            if let Some((field, _)) = dims.iter().find(|(_, v)| *v == 0) {
                return Err(ManifestError::Schema(format!(
                    "layer {:?}: {field} must be at least 1",
                    l.name
                )));
            }
            if l.flatten_factor == Some(0) {
                return Err(ManifestError::Schema(format!(
                    "layer {:?}: flatten_factor must be at least 1",
                    l.name
                )));
            }
        }

        let mut has_pred = vec![false; self.layers.len()];
        for l in &self.layers {
            let Some(target) = &l.next_layer else { continue };
            let &j = index
                .get(target.as_str())
                .ok_or_else(|| ManifestError::DanglingReference {
                    layer: l.name.clone(),
                    target: target.clone(),
                })?;
            if std::mem::replace(&mut has_pred[j], true) {
                return Err(ManifestError::Schema(format!(
                    "layer {target:?} has more than one predecessor; branching topologies are not supported"
                )));
            }
            let next = &self.layers[j];
            let expected = l.n * l.coupling_factor();
            if next.kind == LayerKind::Conv && l.coupling_factor() != 1 {
                return Err(ManifestError::Schema(format!(
                    "layer {:?}: flatten_factor only applies before a fully connected layer",
                    l.name
                )));
            }
            if next.c != expected {
                return Err(ManifestError::ShapeConflict {
                    layer: next.name.clone(),
                    detail: format!(
                        "expects {} input channels but predecessor {:?} provides {expected}",
                        next.c, l.name
                    ),
                });
            }
        }

        // every node has out-degree <= 1 and in-degree <= 1, so walking the
        // chain from each node either terminates or revisits a node
        for start in 0..self.layers.len() {
            let mut cur = start;
            for _ in 0..=self.layers.len() {
                match &self.layers[cur].next_layer {
                    Some(t) => cur = index[t.as_str()],
                    None => break,
                }
                if cur == start {
                    return Err(ManifestError::Schema(format!(
                        "next_layer references form a cycle through {:?}",
                        self.layers[start].name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A validated manifest together with its loaded weight tensors.
#[derive(Debug, Clone)]
pub struct Model {
    pub manifest: ModelManifest,
    weights: Vec<Option<Tensor>>,
}

impl Model {
    /// Reads a manifest file; weight paths resolve relative to its directory.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ManifestError> {
        let bytes = std::fs::read(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| ManifestError::Schema("manifest is not valid UTF-8".into()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let model = load_manifest(text, base)?;
        Ok((model, bytes))
    }

    pub fn weights(&self, name: &str) -> Option<&Tensor> {
        let i = self.manifest.index_of(name)?;
        self.weights[i].as_ref()
    }

    /// Filters of a conv layer.
    pub fn filter_set(&self, name: &str) -> Option<FilterSet> {
        let spec = self.manifest.layer(name)?;
        if spec.kind != LayerKind::Conv {
            return None;
        }
        self.weights(name).and_then(FilterSet::from_tensor)
    }
}

/// Parses and validates a manifest. Conv layers must reference a weight file
/// of shape `(n, kernel_h, kernel_w, c)`; fully connected layers may leave
/// `weights_path` empty, otherwise the file must have shape `(n, c)`.
pub fn load_manifest(text: &str, base_dir: &Path) -> Result<Model, ManifestError> {
    let manifest: ModelManifest =
        serde_json::from_str(text).map_err(|e| ManifestError::Schema(e.to_string()))?;
    manifest.validate()?;

    let mut weights = Vec::with_capacity(manifest.layers.len());
    for l in &manifest.layers {
        if l.kind == LayerKind::FullyConnected && l.weights_path.is_empty() {
            weights.push(None);
            continue;
        }
        if l.weights_path.is_empty() {
            return Err(ManifestError::Schema(format!(
                "conv layer {:?} needs a weights_path",
                l.name
            )));
        }
        let path = base_dir.join(&l.weights_path);
        let bytes = std::fs::read(&path).map_err(|source| ManifestError::Io {
            path: path.clone(),
            source,
        })?;
        let tensor = parse_npy(&bytes).map_err(|source| ManifestError::Npy {
            path: path.clone(),
            source,
        })?;
        let expected: Vec<usize> = match l.kind {
            LayerKind::Conv => vec![l.n, l.kernel_h, l.kernel_w, l.c],
            LayerKind::FullyConnected => vec![l.n, l.c],
        };
        if tensor.shape() != expected.as_slice() {
            return Err(ManifestError::ShapeConflict {
                layer: l.name.clone(),
                detail: format!(
                    "weight file shape {:?} differs from declared {:?}",
                    tensor.shape(),
                    expected
                ),
            });
        }
        weights.push(Some(tensor));
    }
    Ok(Model { manifest, weights })
}
