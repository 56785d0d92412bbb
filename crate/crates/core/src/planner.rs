//! Whole-model pruning plans with parameter and MAC accounting.
//!
//! One MAC is one multiply plus one accumulate. Only conv and fully connected
//! layers carry cost; pooling, activations and normalization count as zero.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::centrality::{Method, PruneSelection};
use crate::tensor_io::{LayerKind, LayerSpec, ModelManifest};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("layer {layer:?}: active counts (in {active_in}, filters {active_filters}) must be in 1..=declared")]
    InvalidCounts {
        layer: String,
        active_in: usize,
        active_filters: usize,
    },
    #[error("selection for layer {0:?} keeps no filters")]
    EmptyLayer(String),
    #[error("unknown layer {0:?}")]
    UnknownLayer(String),
    #[error("layer {0:?} is not prunable (only conv layers are)")]
    NotPrunable(String),
    #[error("selection for layer {layer:?} covers {found} filters, layer has {expected}")]
    SelectionSize {
        layer: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub params: u64,
    pub macs: u64,
}

impl std::ops::Add for LayerCost {
    type Output = LayerCost;

    fn add(self, rhs: LayerCost) -> LayerCost {
        LayerCost {
            params: self.params + rhs.params,
            macs: self.macs + rhs.macs,
        }
    }
}

impl std::iter::Sum for LayerCost {
    fn sum<I: Iterator<Item = LayerCost>>(iter: I) -> LayerCost {
        iter.fold(LayerCost::default(), |a, b| a + b)
    }
}

/// Cost of one layer with `active_in_channels` inputs and `active_filters` outputs.
pub fn layer_cost(
    spec: &LayerSpec,
    active_in_channels: usize,
    active_filters: usize,
) -> Result<LayerCost, PlanError> {
    if !(1..=spec.c).contains(&active_in_channels) || !(1..=spec.n).contains(&active_filters) {
        return Err(PlanError::InvalidCounts {
            layer: spec.name.clone(),
            active_in: active_in_channels,
            active_filters,
        });
    }
    let (cin, out) = (active_in_channels as u64, active_filters as u64);
    let bias = if spec.has_bias { out } else { 0 };
    Ok(match spec.kind {
        LayerKind::Conv => {
            let kernel = (spec.kernel_h * spec.kernel_w) as u64;
            let spatial = (spec.out_h * spec.out_w) as u64;
            LayerCost {
                params: out * kernel * cin + bias,
                macs: out * kernel * cin * spatial,
            }
        }
        LayerKind::FullyConnected => LayerCost {
            params: cin * out + bias,
            macs: cin * out,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerPlan {
    pub name: String,
    /// `None` for layers that were not pruned.
    pub selection: Option<PruneSelection>,
    pub active_in_channels: usize,
    pub active_filters: usize,
    pub before: LayerCost,
    pub after: LayerCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruningPlan {
    pub method: Option<Method>,
    pub p_by_layer: BTreeMap<String, f64>,
    /// In manifest order.
    pub layers: Vec<LayerPlan>,
    pub before: LayerCost,
    pub after: LayerCost,
}

impl PruningPlan {
    pub fn layer(&self, name: &str) -> Option<&LayerPlan> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn selection(&self, name: &str) -> Option<&PruneSelection> {
        self.layer(name).and_then(|l| l.selection.as_ref())
    }
}

/// Applies per-layer selections and propagates the removed channels along
/// `next_layer` links. Layers without a selection keep every filter.
pub fn build_plan(
    manifest: &ModelManifest,
    selections: &BTreeMap<String, PruneSelection>,
) -> Result<PruningPlan, PlanError> {
    for (name, sel) in selections {
        let spec = manifest
            .layer(name)
            .ok_or_else(|| PlanError::UnknownLayer(name.clone()))?;
        if spec.kind != LayerKind::Conv {
            return Err(PlanError::NotPrunable(name.clone()));
        }
        if sel.n() != spec.n {
            return Err(PlanError::SelectionSize {
                layer: name.clone(),
                expected: spec.n,
                found: sel.n(),
            });
        }
        if sel.keep.is_empty() {
            return Err(PlanError::EmptyLayer(name.clone()));
        }
    }

    let active_filters = |spec: &LayerSpec| {
        selections
            .get(&spec.name)
            .map_or(spec.n, |s| s.keep.len())
    };

    let mut layers = Vec::with_capacity(manifest.layers.len());
    for spec in &manifest.layers {
        let removed_inputs = manifest
            .predecessor(&spec.name)
            .map_or(0, |pred| (pred.n - active_filters(pred)) * pred.coupling_factor());
        let active_in = spec.c - removed_inputs;
        let filters = active_filters(spec);
        layers.push(LayerPlan {
            name: spec.name.clone(),
            selection: selections.get(&spec.name).cloned(),
            active_in_channels: active_in,
            active_filters: filters,
            before: layer_cost(spec, spec.c, spec.n)?,
            after: layer_cost(spec, active_in, filters)?,
        });
    }
    Ok(PruningPlan {
        method: None,
        p_by_layer: BTreeMap::new(),
        before: layers.iter().map(|l| l.before).sum(),
        after: layers.iter().map(|l| l.after).sum(),
        layers,
    })
}

/// `100·(1 − after/before)` rounded to two decimals; 0 when `before` is 0.
pub fn reduction_pct(before: u64, after: u64) -> f64 {
    if before == 0 {
        return 0.0;
    }
    let pct = 100.0 * (1.0 - after as f64 / before as f64);
    (pct * 100.0).round() / 100.0
}
