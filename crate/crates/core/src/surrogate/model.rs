//! The surrogate network: a stack of GMM-kernel graph convolutions with
//! ELU nonlinearities, identity skip connections between equal-width
//! layers, and inverted dropout on every layer input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{node_attr_dim, Mesh};
use crate::rng::{standard_normal, stream_rng, uniform};
use crate::scalar::Scalar;
use crate::surrogate::layer::{ConvCache, GmmConvLayer, GraphCache, LayerGrads};

/// Architecture hyperparameters; the trained weights live in
/// [`SurrogateModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub depth: usize,
    pub hidden_dim: usize,
    pub kernels: usize,
    /// Sinusoid count A in the node features (dimension 3 + 3A).
    pub sinusoids: usize,
    /// Initial diagonal variance of the edge kernels. Should sit near
    /// the squared edge-attribute scale of the meshes, or the Gaussian
    /// weights start out flat and the kernels train slowly.
    pub init_sigma: f64,
    /// Read Eq.-style center transform instead of neighbor transform.
    pub strict_center_transform: bool,
}

fn default_init_sigma() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            depth: 6,
            hidden_dim: 32,
            kernels: 4,
            sinusoids: 4,
            init_sigma: default_init_sigma(),
            strict_center_transform: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel<T> {
    pub layers: Vec<GmmConvLayer<T>>,
    pub sinusoids: usize,
    pub dropout_rate: T,
    pub seed: u64,
    pub strict_center_transform: bool,
    /// Affine de-standardization of the network output: predictions are
    /// `net * out_scale + out_shift`. Identity unless training
    /// standardized the target fields.
    pub out_scale: T,
    pub out_shift: T,
}

/// Everything the stack backward pass needs, produced by
/// [`SurrogateModel::forward_cached`].
pub struct ForwardCache<T> {
    /// Per layer: input features (before dropout).
    inputs: Vec<Vec<T>>,
    /// Per layer: dropout mask scaled by 1/(1-rate), if dropout was live.
    masks: Vec<Option<Vec<T>>>,
    /// Per layer: pre-activation conv output.
    pre_act: Vec<Vec<T>>,
    /// Per layer: conv internals.
    conv: Vec<ConvCache<T>>,
}

/// Whole-model gradients, laid out like the layers.
#[derive(Debug, Clone)]
pub struct ModelGrads<T> {
    pub layers: Vec<LayerGrads<T>>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn zeros_like(model: &SurrogateModel<T>) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrads {
                    theta: vec![T::zero(); l.theta.len()],
                    mu: vec![T::zero(); l.mu.len()],
                    log_var: vec![T::zero(); l.log_var.len()],
                })
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.theta.iter_mut().zip(&b.theta) {
                *x += *y;
            }
            for (x, y) in a.mu.iter_mut().zip(&b.mu) {
                *x += *y;
            }
            for (x, y) in a.log_var.iter_mut().zip(&b.log_var) {
                *x += *y;
            }
        }
    }
}

/// Gradients with respect to the network inputs, for latent-space
/// gradient proposals.
#[derive(Debug, Clone)]
pub struct InputGrads<T> {
    /// dL/d(node features), row-major `V x M`.
    pub node_feats: Vec<T>,
    /// dL/d(edge attributes), aligned with `mesh.edges`.
    pub edge_attrs: Vec<[T; 3]>,
}

fn elu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        x.exp() - T::one()
    }
}

fn elu_grad<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        x.exp()
    }
}

impl<T: Scalar> SurrogateModel<T> {
    /// Deterministic initialization from a seed: Theta entries uniform in
    /// +-1/sqrt(in_dim), kernel means from a small Gaussian, unit
    /// variances.
    pub fn init(cfg: &ModelConfig, dropout_rate: T, seed: u64) -> Result<Self> {
        if cfg.depth == 0 {
            return Err(Error::Config("depth must be >= 1".into()));
        }
        if cfg.kernels == 0 {
            return Err(Error::Config("kernel count must be >= 1".into()));
        }
        if dropout_rate < T::zero() || dropout_rate >= T::one() {
            return Err(Error::Config("dropout rate must be in [0, 1)".into()));
        }
        if cfg.init_sigma <= 0.0 {
            return Err(Error::Config("init_sigma must be positive".into()));
        }
        let m = node_attr_dim(cfg.sinusoids);
        let mut dims = Vec::with_capacity(cfg.depth + 1);
        dims.push(m);
        for _ in 1..cfg.depth {
            dims.push(cfg.hidden_dim);
        }
        dims.push(1);
        let mut rng = stream_rng(seed, 0xB00F);
        let layers = (0..cfg.depth)
            .map(|l| {
                let (din, dout) = (dims[l], dims[l + 1]);
                let scale = T::one() / T::from_usize(din).sqrt();
                let theta = (0..cfg.kernels * dout * din)
                    .map(|_| uniform(&mut rng, -scale, scale))
                    .collect();
                let mu_scale = T::from_f64(cfg.init_sigma.sqrt().min(0.1));
                let mu = (0..cfg.kernels * 3)
                    .map(|_| standard_normal::<T>(&mut rng) * mu_scale)
                    .collect();
                let log_var = vec![T::from_f64(cfg.init_sigma.ln()); cfg.kernels * 3];
                GmmConvLayer {
                    in_dim: din,
                    out_dim: dout,
                    kernels: cfg.kernels,
                    edge_dim: 3,
                    theta,
                    mu,
                    log_var,
                }
            })
            .collect();
        Ok(Self {
            layers,
            sinusoids: cfg.sinusoids,
            dropout_rate,
            seed,
            strict_center_transform: cfg.strict_center_transform,
            out_scale: T::one(),
            out_shift: T::zero(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    /// Flattens the mesh node attributes after checking dimensions.
    pub fn features_of(&self, mesh: &Mesh<T>) -> Result<Vec<T>> {
        let attrs = mesh
            .node_attrs
            .as_ref()
            .ok_or_else(|| Error::Shape("mesh node attributes not built".into()))?;
        let m = self.input_dim();
        let mut flat = Vec::with_capacity(attrs.len() * m);
        for a in attrs {
            if a.len() != m {
                return Err(Error::Shape(format!(
                    "node attribute dim {} does not match model input dim {m}",
                    a.len()
                )));
            }
            flat.extend_from_slice(a);
        }
        Ok(flat)
    }

    /// Per-node scalar prediction. With `dropout_active`, every layer
    /// input gets an independent inverted-dropout mask drawn from `rng`.
    pub fn forward(
        &self,
        graph: &GraphCache<T>,
        feats: &[T],
        dropout_active: bool,
        rng: &mut impl Rng,
    ) -> Result<Vec<T>> {
        Ok(self.forward_cached(graph, feats, dropout_active, rng)?.0)
    }

    /// Forward pass retaining intermediates for [`Self::backward`].
    pub fn forward_cached(
        &self,
        graph: &GraphCache<T>,
        feats: &[T],
        dropout_active: bool,
        rng: &mut impl Rng,
    ) -> Result<(Vec<T>, ForwardCache<T>)> {
        let live_dropout = dropout_active && self.dropout_rate > T::zero();
        let keep = T::one() - self.dropout_rate;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
            pre_act: Vec::with_capacity(self.layers.len()),
            conv: Vec::with_capacity(self.layers.len()),
        };
        let mut x = feats.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (dropped, mask) = if live_dropout {
                let mask: Vec<T> = (0..x.len())
                    .map(|_| {
                        if rng.gen::<f64>() < keep.as_f64() {
                            keep.recip()
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                let dropped: Vec<T> = x.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
                (dropped, Some(mask))
            } else {
                (x.clone(), None)
            };
            let (y, conv) = layer.forward(graph, &dropped, self.strict_center_transform)?;
            let out = if l == last {
                y.clone()
            } else {
                let mut act: Vec<T> = y.iter().map(|&v| elu(v)).collect();
                if layer.in_dim == layer.out_dim {
                    for (a, &xi) in act.iter_mut().zip(&x) {
                        *a += xi;
                    }
                }
                act
            };
            cache.inputs.push(x);
            cache.masks.push(mask);
            cache.pre_act.push(y);
            cache.conv.push(conv);
            x = out;
        }
        if self.out_scale != T::one() || self.out_shift != T::zero() {
            for v in &mut x {
                *v = *v * self.out_scale + self.out_shift;
            }
        }
        Ok((x, cache))
    }

    /// Reverse accumulation through the whole stack. `upstream` is
    /// dL/d(output), one value per node. Edge-attribute gradients are
    /// filled only when `input_grads` is requested.
    pub fn backward(
        &self,
        graph: &GraphCache<T>,
        cache: &ForwardCache<T>,
        upstream: &[T],
        want_input_grads: bool,
    ) -> (ModelGrads<T>, Option<InputGrads<T>>) {
        let last = self.layers.len() - 1;
        let mut edge_grads =
            want_input_grads.then(|| vec![[T::zero(); 3]; graph.edge_count]);
        let mut grads = Vec::with_capacity(self.layers.len());
        // Through the output de-standardization.
        let mut g: Vec<T> = upstream.iter().map(|&u| u * self.out_scale).collect();
        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            // Through the activation and skip.
            let (dy, skip_grad) = if l == last {
                (g.clone(), None)
            } else {
                let dy: Vec<T> =
                    g.iter().zip(&cache.pre_act[l]).map(|(&gv, &yv)| gv * elu_grad(yv)).collect();
                let skip = (layer.in_dim == layer.out_dim).then(|| g.clone());
                (dy, skip)
            };
            // Through the convolution; feed it the dropped input.
            let dropped: Vec<T> = match &cache.masks[l] {
                Some(mask) => {
                    cache.inputs[l].iter().zip(mask).map(|(&v, &m)| v * m).collect()
                }
                None => cache.inputs[l].clone(),
            };
            let (layer_grads, mut dx) = layer.backward(
                graph,
                &dropped,
                &cache.conv[l],
                &dy,
                self.strict_center_transform,
                edge_grads.as_deref_mut(),
            );
            grads.push(layer_grads);
            // Through the dropout mask.
            if let Some(mask) = &cache.masks[l] {
                for (d, &m) in dx.iter_mut().zip(mask) {
                    *d *= m;
                }
            }
            if let Some(skip) = skip_grad {
                for (d, &s) in dx.iter_mut().zip(&skip) {
                    *d += s;
                }
            }
            g = dx;
        }
        grads.reverse();
        let input_grads = edge_grads.map(|eg| InputGrads { node_feats: g, edge_attrs: eg });
        (ModelGrads { layers: grads }, input_grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_features, circle_contour};
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn small_mesh() -> (Mesh<f64>, GraphCache<f64>) {
        let mut mesh = circle_contour::<f64>(10, 0.5);
        build_features(&mut mesh, 2).unwrap();
        let graph = GraphCache::build(&mesh).unwrap();
        (mesh, graph)
    }

    fn small_model(depth: usize, seed: u64) -> SurrogateModel<f64> {
        let cfg = ModelConfig {
            depth,
            hidden_dim: 8,
            kernels: 2,
            sinusoids: 2,
            init_sigma: 1.0,
            strict_center_transform: false,
        };
        SurrogateModel::init(&cfg, 0.0, seed).unwrap()
    }

    use crate::geometry::Mesh;

    #[test]
    fn deterministic_without_dropout() {
        let (mesh, graph) = small_mesh();
        let model = small_model(3, 7);
        let feats = model.features_of(&mesh).unwrap();
        let mut rng = stream_rng(0, 0);
        let a = model.forward(&graph, &feats, false, &mut rng).unwrap();
        let b = model.forward(&graph, &feats, false, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_rate_dropout_is_identity() {
        let (mesh, graph) = small_mesh();
        let model = small_model(3, 7);
        let feats = model.features_of(&mesh).unwrap();
        let mut rng = stream_rng(1, 2);
        let active = model.forward(&graph, &feats, true, &mut rng).unwrap();
        let inactive = model.forward(&graph, &feats, false, &mut rng).unwrap();
        assert_eq!(active, inactive);
    }

    #[test]
    fn depth_one_is_a_single_conv() {
        let (mesh, graph) = small_mesh();
        let model = small_model(1, 3);
        assert_eq!(model.layers.len(), 1);
        let feats = model.features_of(&mesh).unwrap();
        let mut rng = stream_rng(0, 0);
        let out = model.forward(&graph, &feats, false, &mut rng).unwrap();
        let (direct, _) = model.layers[0].forward(&graph, &feats, false).unwrap();
        assert_eq!(out, direct);
    }

    #[test]
    fn same_seed_same_weights() {
        let a = small_model(4, 11);
        let b = small_model(4, 11);
        assert_eq!(a, b);
        let c = small_model(4, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn permutation_equivariance() {
        let (mesh, graph) = small_mesh();
        let model = small_model(3, 5);
        let feats = model.features_of(&mesh).unwrap();
        let mut rng = stream_rng(0, 0);
        let base = model.forward(&graph, &feats, false, &mut rng).unwrap();

        // Relabel vertices with a rotation permutation.
        let n = mesh.vertex_count();
        let perm: Vec<usize> = (0..n).map(|i| (i + 3) % n).collect(); // new[i] = old[perm[i]]
        let mut inv = vec![0usize; n];
        for (new_i, &old_i) in perm.iter().enumerate() {
            inv[old_i] = new_i;
        }
        let mut relabeled = Mesh::new(
            perm.iter().map(|&o| mesh.vertices[o]).collect(),
            mesh.edges.iter().map(|e| [inv[e[0]], inv[e[1]]]).collect(),
        );
        build_features(&mut relabeled, 2).unwrap();
        let graph2 = GraphCache::build(&relabeled).unwrap();
        let feats2 = model.features_of(&relabeled).unwrap();
        let out2 = model.forward(&graph2, &feats2, false, &mut rng).unwrap();
        for i in 0..n {
            assert_relative_eq!(out2[inv[i]], base[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn dropout_mean_converges_to_deterministic_output() {
        // Single-layer model: output is linear in the (dropped) input, so
        // the inverted-dropout mean matches the deterministic pass.
        let (mesh, graph) = small_mesh();
        let cfg = ModelConfig {
            depth: 1,
            hidden_dim: 8,
            kernels: 2,
            sinusoids: 2,
            init_sigma: 1.0,
            strict_center_transform: false,
        };
        let model = SurrogateModel::init(&cfg, 0.3, 99).unwrap();
        let feats = model.features_of(&mesh).unwrap();
        let mut rng = stream_rng(0, 0);
        let det = model.forward(&graph, &feats, false, &mut rng).unwrap();
        let t = 10_000usize;
        let n = det.len();
        let mut mean = vec![0.0f64; n];
        let mut m2 = vec![0.0f64; n];
        for pass in 0..t {
            let mut prng = stream_rng(42, pass as u64);
            let out = model.forward(&graph, &feats, true, &mut prng).unwrap();
            for i in 0..n {
                let delta = out[i] - mean[i];
                mean[i] += delta / (pass + 1) as f64;
                m2[i] += delta * (out[i] - mean[i]);
            }
        }
        for i in 0..n {
            let se = (m2[i] / (t - 1) as f64 / t as f64).sqrt();
            assert!(
                (mean[i] - det[i]).abs() <= 3.0 * se.max(1e-12),
                "node {i}: mean {} det {} se {se}",
                mean[i],
                det[i]
            );
        }
    }

    #[test]
    fn strict_center_mode_differs() {
        let (mesh, graph) = small_mesh();
        let mut model = small_model(2, 5);
        let feats = model.features_of(&mesh).unwrap();
        let mut rng = stream_rng(0, 0);
        let neighbor = model.forward(&graph, &feats, false, &mut rng).unwrap();
        model.strict_center_transform = true;
        let center = model.forward(&graph, &feats, false, &mut rng).unwrap();
        assert_ne!(neighbor, center);
    }
}
