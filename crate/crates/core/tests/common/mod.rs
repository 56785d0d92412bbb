//! Independent reference implementations and fixture helpers shared by the
//! integration tests. Nothing here calls into the code paths it checks.

#![allow(clippy::needless_range_loop, dead_code)]

use std::path::{Path, PathBuf};

use filterprune::tensor_io::{write_npy, TensorData};
use filterprune::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_like(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // sum of uniforms; distribution shape is irrelevant here
    (0..len)
        .map(|_| (0..4).map(|_| rng.gen::<f64>() - 0.5).sum::<f64>())
        .collect()
}

/// Full SVD by one-sided Jacobi rotations. Returns singular values in
/// descending order with matching left/right singular vectors.
pub fn jacobi_svd(m: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    // work on columns of A (rows × cols); V starts as identity
    let mut a: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m[i * cols + j]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha: f64 = a[i].iter().map(|x| x * x).sum();
                let beta: f64 = a[j].iter().map(|x| x * x).sum();
                let gamma: f64 = a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-17 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let (x, y) = (a[i][k], a[j][k]);
                    a[i][k] = c * x - s * y;
                    a[j][k] = s * x + c * y;
                }
                for k in 0..cols {
                    let (x, y) = (v[i][k], v[j][k]);
                    v[i][k] = c * x - s * y;
                    v[j][k] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)> = a
        .into_iter()
        .zip(v)
        .map(|(col, vj)| {
            let s = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            let u = if s > 0.0 { col.iter().map(|x| x / s).collect() } else { col };
            (s, u, vj)
        })
        .collect();
    triplets.sort_by(|x, y| y.0.total_cmp(&x.0));
    let sig = triplets.iter().map(|t| t.0).collect();
    let us = triplets.iter().map(|t| t.1.clone()).collect();
    let vs = triplets.into_iter().map(|t| t.2).collect();
    (sig, us, vs)
}

/// `‖M − σ u vᵀ‖_F`
pub fn rank1_residual(m: &[f64], rows: usize, cols: usize, sigma: f64, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let d = m[i * cols + j] - sigma * u[i] * v[j];
            s += d * d;
        }
    }
    s.sqrt()
}

/// Betweenness by enumerating every simple path between every unordered
/// pair on the complete graph with edge lengths `d`.
pub fn brute_force_bc(d: &[f64], n: usize) -> Vec<f64> {
    fn walk(
        d: &[f64],
        n: usize,
        path: &mut Vec<usize>,
        len: f64,
        target: usize,
        found: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let last = *path.last().unwrap();
        if last == target {
            found.push((len, path.clone()));
            return;
        }
        for next in 0..n {
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            walk(d, n, path, len + d[last * n + next], target, found);
            path.pop();
        }
    }
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let mut found = Vec::new();
            walk(d, n, &mut vec![s], 0.0, t, &mut found);
            let best = found.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
            let shortest: Vec<&Vec<usize>> = found
                .iter()
                .filter(|f| (f.0 - best).abs() <= 1e-12 * best)
                .map(|f| &f.1)
                .collect();
            let total = shortest.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&v)).count() as f64;
                bc[v] += through / total;
            }
        }
    }
    bc
}

/// Retained similarity of `keep` from a dense symmetric matrix.
pub fn subset_objective(w: &[f64], n: usize, keep: &[usize]) -> f64 {
    let mut s = 0.0;
    for a in 0..keep.len() {
        for b in a + 1..keep.len() {
            s += w[keep[a] * n + keep[b]];
        }
    }
    s
}

/// Every size-`k` subset by bitmask, highest mask first; returns the minimum
/// objective and all subsets within `tol` of it, each sorted ascending.
pub fn bitmask_minimizers(w: &[f64], n: usize, k: usize, tol: f64) -> (f64, Vec<Vec<usize>>) {
    let mut all = Vec::new();
    for mask in (0u32..(1 << n)).rev() {
        if mask.count_ones() as usize != k {
            continue;
        }
        let keep: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        all.push((subset_objective(w, n, &keep), keep));
    }
    let best = all.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let mut ties: Vec<Vec<usize>> = all
        .into_iter()
        .filter(|x| x.0 <= best + tol)
        .map(|x| x.1)
        .collect();
    ties.sort();
    (best, ties)
}

/// Random symmetric similarity matrix with unit diagonal.
pub fn random_similarity(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        w[i * n + i] = 1.0;
        for j in i + 1..n {
            let x: f64 = rng.gen();
            w[i * n + j] = x;
            w[j * n + i] = x;
        }
    }
    w
}

/// ⌈(1−p)n⌉ computed with exact rational arithmetic for p = num/den.
pub fn exact_keep(n: usize, num: usize, den: usize) -> usize {
    ((den - num) * n).div_ceil(den)
}

/// Writes npy weights and a manifest into a temporary directory.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    layers: Vec<Value>,
}

pub struct ConvLayer<'a> {
    pub name: &'a str,
    pub n: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub c: usize,
    pub out: usize,
    pub bias: bool,
    pub next: Option<&'a str>,
    pub flatten: Option<usize>,
}

impl<'a> ConvLayer<'a> {
    pub fn new(name: &'a str, n: usize, k: usize, c: usize) -> Self {
        ConvLayer {
            name,
            n,
            kernel_h: k,
            kernel_w: k,
            c,
            out: 8,
            bias: true,
            next: None,
            flatten: None,
        }
    }
}

impl Fixture {
    pub fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
            layers: Vec::new(),
        }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn conv(&mut self, l: ConvLayer<'_>, weights: Vec<f32>) -> &mut Self {
        let file = format!("{}.npy", l.name);
        let t = Tensor::new(
            vec![l.n, l.kernel_h, l.kernel_w, l.c],
            TensorData::F32(weights),
        )
        .unwrap();
        std::fs::write(self.dir.path().join(&file), write_npy(&t)).unwrap();
        self.layers.push(json!({
            "name": l.name, "kind": "conv", "n": l.n,
            "kernel_h": l.kernel_h, "kernel_w": l.kernel_w, "c": l.c,
            "out_h": l.out, "out_w": l.out, "has_bias": l.bias,
            "weights_path": file, "next_layer": l.next, "flatten_factor": l.flatten,
        }));
        self
    }

    pub fn fc(&mut self, name: &str, n_out: usize, c_in: usize, bias: bool) -> &mut Self {
        self.layers.push(json!({
            "name": name, "kind": "fully_connected", "n": n_out,
            "kernel_h": 1, "kernel_w": 1, "c": c_in, "out_h": 1, "out_w": 1,
            "has_bias": bias, "weights_path": "", "next_layer": null, "flatten_factor": null,
        }));
        self
    }

    pub fn write_manifest(&self) -> PathBuf {
        let path = self.dir.path().join("manifest.json");
        let text = serde_json::to_string_pretty(&json!({ "layers": self.layers })).unwrap();
        std::fs::write(&path, text).unwrap();
        path
    }
}

/// Three 1×2 filters at 0°, 30° and 60°: the middle one lies on the
/// shortest path between the outer two.
pub fn three_node_filters() -> Vec<f32> {
    [0.0f64, 30.0, 60.0]
        .iter()
        .flat_map(|deg| {
            let r = deg.to_radians();
            [r.cos() as f32, r.sin() as f32]
        })
        .collect()
}

pub fn random_weights(rng: &mut ChaCha8Rng, len: usize) -> Vec<f32> {
    (0..len).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}
