//! A single graph convolution with Gaussian-mixture edge kernels.
//!
//! For node j with neighborhood N(j) (self-loop included, zero edge
//! attribute) the layer computes
//!
//! ```text
//! out_j = (1/|N(j)|) sum_{n in N(j)} (1/K) sum_k w_k(e_{n->j}) * Theta_k u_n
//! w_k(e) = exp(-1/2 sum_l (e_l - mu_{k,l})^2 / var_{k,l})
//! ```
//!
//! Variances are stored as log-values so gradient steps keep them
//! positive. A strict-center mode transforms the receiving node's
//! features (`Theta_k u_j`) instead of the neighbor's.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::scalar::Scalar;

/// Marker for the implicit self-loop in adjacency entries.
pub const SELF_LOOP: usize = usize::MAX;

/// CSR-style incoming adjacency with per-entry edge attributes, built
/// once per mesh and shared by every layer and pass.
#[derive(Debug, Clone)]
pub struct GraphCache<T> {
    /// Entry range per destination node; len = V + 1.
    pub offsets: Vec<usize>,
    /// Source node per entry (self-loop first for each destination).
    pub src: Vec<usize>,
    /// Edge attribute per entry (zero for self-loops).
    pub attr: Vec<[T; 3]>,
    /// Index into `mesh.edges` per entry, or [`SELF_LOOP`].
    pub edge_index: Vec<usize>,
    /// Number of mesh edges (for edge-gradient allocation).
    pub edge_count: usize,
}

impl<T: Scalar> GraphCache<T> {
    pub fn build(mesh: &Mesh<T>) -> Result<Self> {
        let attrs = mesh
            .edge_attrs
            .as_ref()
            .ok_or_else(|| Error::Shape("mesh edge attributes not built".into()))?;
        if attrs.len() != mesh.edges.len() {
            return Err(Error::Shape("edge attribute count mismatch".into()));
        }
        let n = mesh.vertex_count();
        let mut incoming: Vec<Vec<(usize, [T; 3], usize)>> = vec![Vec::new(); n];
        for (idx, (e, a)) in mesh.edges.iter().zip(attrs).enumerate() {
            if a.len() != 3 {
                return Err(Error::Shape(format!("edge attr dim {} != 3", a.len())));
            }
            incoming[e[1]].push((e[0], [a[0], a[1], a[2]], idx));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut src = Vec::new();
        let mut attr = Vec::new();
        let mut edge_index = Vec::new();
        offsets.push(0);
        for (j, inc) in incoming.iter().enumerate() {
            src.push(j);
            attr.push([T::zero(); 3]);
            edge_index.push(SELF_LOOP);
            for &(s, a, idx) in inc {
                src.push(s);
                attr.push(a);
                edge_index.push(idx);
            }
            offsets.push(src.len());
        }
        Ok(Self { offsets, src, attr, edge_index, edge_count: mesh.edges.len() })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn entry_count(&self) -> usize {
        self.src.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct GmmConvLayer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kernels: usize,
    pub edge_dim: usize,
    /// Kernel-major weight matrices, `kernels * out_dim * in_dim`.
    pub theta: Vec<T>,
    /// Kernel means, `kernels * edge_dim`.
    pub mu: Vec<T>,
    /// Log-variances of the diagonal covariances, `kernels * edge_dim`.
    pub log_var: Vec<T>,
}

/// Per-layer gradients, same layout as the parameters.
#[derive(Debug, Clone)]
pub struct LayerGrads<T> {
    pub theta: Vec<T>,
    pub mu: Vec<T>,
    pub log_var: Vec<T>,
}

/// Forward intermediates one layer needs for its backward pass.
#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    /// Transformed features `Theta_k u_n`, layout `k * V * out_dim`.
    transformed: Vec<T>,
    /// Kernel weights per adjacency entry, layout `entry * kernels`.
    weights: Vec<T>,
}

impl<T: Scalar> GmmConvLayer<T> {
    /// Validates shapes and positivity of the provided variances.
    pub fn from_params(
        in_dim: usize,
        out_dim: usize,
        kernels: usize,
        theta: Vec<T>,
        mu: Vec<T>,
        sigma_diag: Vec<T>,
    ) -> Result<Self> {
        let edge_dim = 3;
        if theta.len() != kernels * out_dim * in_dim
            || mu.len() != kernels * edge_dim
            || sigma_diag.len() != kernels * edge_dim
        {
            return Err(Error::Shape("GMM-conv parameter shapes inconsistent".into()));
        }
        if sigma_diag.iter().any(|&s| s <= T::zero()) {
            return Err(Error::Config("sigma diagonal entries must be positive".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            kernels,
            edge_dim,
            theta,
            mu,
            log_var: sigma_diag.into_iter().map(|s| s.ln()).collect(),
        })
    }

    /// Diagonal variances (the stored form is log-variance).
    pub fn sigma_diag(&self) -> Vec<T> {
        self.log_var.iter().map(|&lv| lv.exp()).collect()
    }

    /// The Gaussian kernel weight for edge attribute `e` under kernel `k`.
    pub fn gmm_weight(&self, k: usize, e: &[T]) -> T {
        debug_assert!(k < self.kernels);
        debug_assert_eq!(e.len(), self.edge_dim);
        let mut expo = T::zero();
        for l in 0..self.edge_dim {
            let idx = k * self.edge_dim + l;
            let d = e[l] - self.mu[idx];
            expo += d * d / self.log_var[idx].exp();
        }
        (-T::half() * expo).exp()
    }

    fn kernel_weights_for(&self, attr: &[T; 3], out: &mut [T]) {
        for (k, w) in out.iter_mut().enumerate() {
            let mut expo = T::zero();
            for l in 0..self.edge_dim {
                let idx = k * self.edge_dim + l;
                let d = attr[l] - self.mu[idx];
                expo += d * d / self.log_var[idx].exp();
            }
            *w = (-T::half() * expo).exp();
        }
    }

    /// Forward pass over the whole graph. `feats` is row-major
    /// `V x in_dim`; returns `V x out_dim` and the backward cache.
    pub fn forward(
        &self,
        graph: &GraphCache<T>,
        feats: &[T],
        strict_center: bool,
    ) -> Result<(Vec<T>, ConvCache<T>)> {
        let v = graph.node_count();
        if feats.len() != v * self.in_dim {
            return Err(Error::Shape(format!(
                "feature matrix has {} entries, expected {} x {}",
                feats.len(),
                v,
                self.in_dim
            )));
        }
        let (k, din, dout) = (self.kernels, self.in_dim, self.out_dim);
        // Theta_k u_n for every kernel and node.
        let mut transformed = vec![T::zero(); k * v * dout];
        for kk in 0..k {
            let th = &self.theta[kk * dout * din..(kk + 1) * dout * din];
            for n in 0..v {
                let u = &feats[n * din..(n + 1) * din];
                let t = &mut transformed[(kk * v + n) * dout..(kk * v + n + 1) * dout];
                for (o, tv) in t.iter_mut().enumerate() {
                    *tv = th[o * din..(o + 1) * din]
                        .iter()
                        .zip(u)
                        .map(|(&a, &b)| a * b)
                        .sum();
                }
            }
        }
        let mut weights = vec![T::zero(); graph.entry_count() * k];
        let mut out = vec![T::zero(); v * dout];
        let inv_k = T::from_usize(k).recip();
        for j in 0..v {
            let (lo, hi) = (graph.offsets[j], graph.offsets[j + 1]);
            let coef = inv_k / T::from_usize(hi - lo);
            let out_j = &mut out[j * dout..(j + 1) * dout];
            for entry in lo..hi {
                let wslice = &mut weights[entry * k..(entry + 1) * k];
                self.kernel_weights_for(&graph.attr[entry], wslice);
                let feat_node = if strict_center { j } else { graph.src[entry] };
                for (kk, &w) in wslice.iter().enumerate() {
                    let t = &transformed[(kk * v + feat_node) * dout..][..dout];
                    let cw = coef * w;
                    for (o, &tv) in t.iter().enumerate() {
                        out_j[o] += cw * tv;
                    }
                }
            }
        }
        Ok((out, ConvCache { transformed, weights }))
    }

    /// Backward pass. `upstream` is dL/d(out), `V x out_dim`. Returns
    /// parameter gradients, dL/d(feats), and optionally per-edge
    /// attribute gradients (aligned with `mesh.edges`) when
    /// `edge_grads` is provided.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        graph: &GraphCache<T>,
        feats: &[T],
        cache: &ConvCache<T>,
        upstream: &[T],
        strict_center: bool,
        edge_grads: Option<&mut [[T; 3]]>,
    ) -> (LayerGrads<T>, Vec<T>) {
        let v = graph.node_count();
        let (k, din, dout) = (self.kernels, self.in_dim, self.out_dim);
        let inv_k = T::from_usize(k).recip();
        let mut d_theta = vec![T::zero(); k * dout * din];
        let mut d_mu = vec![T::zero(); k * self.edge_dim];
        let mut d_log_var = vec![T::zero(); k * self.edge_dim];
        // s[k][n] = sum over entries feeding from n of coef * w * g_j.
        let mut s = vec![T::zero(); k * v * dout];
        let mut d_edges = edge_grads;
        for j in 0..v {
            let (lo, hi) = (graph.offsets[j], graph.offsets[j + 1]);
            let coef = inv_k / T::from_usize(hi - lo);
            let g = &upstream[j * dout..(j + 1) * dout];
            for entry in lo..hi {
                let feat_node = if strict_center { j } else { graph.src[entry] };
                let wslice = &cache.weights[entry * k..(entry + 1) * k];
                for (kk, &w) in wslice.iter().enumerate() {
                    let cw = coef * w;
                    let srow = &mut s[(kk * v + feat_node) * dout..][..dout];
                    for (o, &gv) in g.iter().enumerate() {
                        srow[o] += cw * gv;
                    }
                    // Scalar through the kernel weight: g . (Theta_k u).
                    let t = &cache.transformed[(kk * v + feat_node) * dout..][..dout];
                    let scal: T =
                        g.iter().zip(t).map(|(&a, &b)| a * b).sum::<T>() * coef * w;
                    let attr = &graph.attr[entry];
                    for l in 0..self.edge_dim {
                        let idx = kk * self.edge_dim + l;
                        let var = self.log_var[idx].exp();
                        let d = attr[l] - self.mu[idx];
                        d_mu[idx] += scal * d / var;
                        d_log_var[idx] += scal * T::half() * d * d / var;
                        if let Some(eg) = d_edges.as_deref_mut() {
                            let eidx = graph.edge_index[entry];
                            if eidx != SELF_LOOP {
                                eg[eidx][l] -= scal * d / var;
                            }
                        }
                    }
                }
            }
        }
        // d_theta_k = sum_n s[k][n] (x) u_n ; d_feats via Theta^T s.
        let mut d_feats = vec![T::zero(); v * din];
        for kk in 0..k {
            let th = &self.theta[kk * dout * din..(kk + 1) * dout * din];
            let dth = &mut d_theta[kk * dout * din..(kk + 1) * dout * din];
            for n in 0..v {
                let srow = &s[(kk * v + n) * dout..][..dout];
                let u = &feats[n * din..(n + 1) * din];
                let df = &mut d_feats[n * din..(n + 1) * din];
                for (o, &sv) in srow.iter().enumerate() {
                    if sv == T::zero() {
                        continue;
                    }
                    let trow = &th[o * din..(o + 1) * din];
                    let dtrow = &mut dth[o * din..(o + 1) * din];
                    for i in 0..din {
                        dtrow[i] += sv * u[i];
                        df[i] += sv * trow[i];
                    }
                }
            }
        }
        (LayerGrads { theta: d_theta, mu: d_mu, log_var: d_log_var }, d_feats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_features, Mesh};
    use approx::assert_relative_eq;

    fn two_node_graph() -> (Mesh<f64>, GraphCache<f64>) {
        let mut mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            vec![[0, 1], [1, 0]],
        );
        build_features(&mut mesh, 0).unwrap();
        let cache = GraphCache::build(&mesh).unwrap();
        (mesh, cache)
    }

    fn identity_layer(wide_sigma: f64) -> GmmConvLayer<f64> {
        // K = 1, Theta = I (3x3), mu = 0, huge sigma so w ~= 1.
        let theta = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        GmmConvLayer::from_params(3, 3, 1, theta, vec![0.0; 3], vec![wide_sigma; 3]).unwrap()
    }

    #[test]
    fn weight_is_one_at_the_mean() {
        let layer = GmmConvLayer::from_params(
            3,
            3,
            2,
            vec![0.0; 18],
            vec![0.1, -0.2, 0.3, 0.0, 0.0, 0.0],
            vec![0.5, 1.0, 2.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        assert_relative_eq!(layer.gmm_weight(0, &[0.1, -0.2, 0.3]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn weight_one_sigma_away_is_exp_minus_half() {
        let sigma2: f64 = 0.7;
        let layer = GmmConvLayer::from_params(
            3,
            3,
            1,
            vec![0.0; 9],
            vec![0.0; 3],
            vec![sigma2, 1.0, 1.0],
        )
        .unwrap();
        let e = [sigma2.sqrt(), 0.0, 0.0];
        assert_relative_eq!(layer.gmm_weight(0, &e), (-0.5f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn weight_decays_monotonically() {
        let layer = identity_layer(1.0);
        let mut prev = layer.gmm_weight(0, &[0.0, 0.0, 0.0]);
        for step in 1..10 {
            let w = layer.gmm_weight(0, &[0.2 * step as f64, 0.0, 0.0]);
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn non_positive_sigma_is_rejected() {
        let err = GmmConvLayer::from_params(3, 3, 1, vec![0.0; 9], vec![0.0; 3], vec![0.0; 3])
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn zero_features_give_zero_output() {
        let (_, graph) = two_node_graph();
        let layer = identity_layer(1.0);
        let (out, _) = layer.forward(&graph, &[0.0; 6], false).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_node_average_with_identity_transform() {
        // With w ~= 1 the output at node j is the average over
        // {self, neighbor}; features chosen so the hand value is exact.
        let (_, graph) = two_node_graph();
        let layer = identity_layer(1e12);
        let feats = vec![2.0, -1.0, 0.5, 4.0, 3.0, -0.5];
        let (out, _) = layer.forward(&graph, &feats, false).unwrap();
        for c in 0..3 {
            let expect = (feats[c] + feats[3 + c]) / 2.0;
            assert!((out[c] - expect).abs() < 1e-6, "{} vs {}", out[c], expect);
        }
    }

    #[test]
    fn isolated_node_scales_by_self_loop_weight() {
        let mut mesh = Mesh::new(vec![[0.5, 0.25, 0.0]], vec![]);
        build_features(&mut mesh, 0).unwrap();
        let graph = GraphCache::build(&mesh).unwrap();
        let mu = [0.3, -0.1, 0.2];
        let sigma = [0.8, 1.3, 0.6];
        let theta = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let layer =
            GmmConvLayer::from_params(3, 3, 1, theta, mu.to_vec(), sigma.to_vec()).unwrap();
        // Hand evaluation: w(0) = exp(-1/2 sum mu_l^2 / sigma_l).
        let w0: f64 =
            (-0.5 * (0.3f64.powi(2) / 0.8 + 0.1f64.powi(2) / 1.3 + 0.2f64.powi(2) / 0.6)).exp();
        let feats = vec![0.5, 0.25, 0.0];
        let (out, _) = layer.forward(&graph, &feats, false).unwrap();
        for c in 0..3 {
            assert_relative_eq!(out[c], w0 * feats[c], epsilon = 1e-14);
        }
    }

    #[test]
    fn forward_is_linear_in_features() {
        let (_, graph) = two_node_graph();
        let layer = GmmConvLayer::from_params(
            3,
            2,
            2,
            (0..12).map(|i| 0.1 * i as f64 - 0.5).collect(),
            vec![0.05, -0.1, 0.0, 0.2, 0.0, -0.3],
            vec![0.5, 0.7, 0.9, 1.1, 1.3, 0.4],
        )
        .unwrap();
        let feats = vec![0.3, -0.6, 0.9, 1.2, 0.1, -0.4];
        let (out1, _) = layer.forward(&graph, &feats, false).unwrap();
        let scaled: Vec<f64> = feats.iter().map(|v| v * 3.5).collect();
        let (out2, _) = layer.forward(&graph, &scaled, false).unwrap();
        for (a, b) in out1.iter().zip(&out2) {
            assert_relative_eq!(a * 3.5, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (_, graph) = two_node_graph();
        let layer = identity_layer(1.0);
        assert!(matches!(
            layer.forward(&graph, &[0.0; 4], false),
            Err(Error::Shape(_))
        ));
    }
}
