//! Training: per-node MSE, exact reverse-mode gradients, and
//! adaptive-moment gradient descent. Deterministic given the dataset
//! order and config.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::FieldSample;
use crate::rng::{shuffle, stream_rng};
use crate::scalar::Scalar;
use crate::surrogate::layer::GraphCache;
use crate::surrogate::model::{ModelConfig, ModelGrads, SurrogateModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>, TrainConfig<T>: Default"))]
#[serde(default)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub learning_rate: T,
    /// Meshes per optimizer step.
    pub batch_size: usize,
    pub dropout_rate: T,
    pub seed: u64,
    pub beta1: T,
    pub beta2: T,
    pub adam_eps: T,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: T::from_f64(0.02),
            batch_size: 16,
            dropout_rate: T::zero(),
            seed: 0,
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            adam_eps: T::from_f64(1e-8),
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    fn validate(&self) -> Result<()> {
        if self.learning_rate <= T::zero() {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// A mesh prepared for repeated passes: adjacency, flattened features
/// and the target field.
pub struct PreparedSample<T> {
    pub graph: GraphCache<T>,
    pub feats: Vec<T>,
    pub target: Vec<T>,
}

/// Builds graph caches and flat feature matrices for a dataset. Meshes
/// without attributes (or with a mismatched sinusoid count) get their
/// features built here on a local copy.
pub fn prepare_dataset<T: Scalar>(
    model: &SurrogateModel<T>,
    dataset: &[FieldSample<T>],
) -> Result<Vec<PreparedSample<T>>> {
    let want_dim = model.input_dim();
    dataset
        .iter()
        .map(|s| {
            s.validate()?;
            let have = s
                .mesh
                .node_attrs
                .as_ref()
                .and_then(|a| a.first().map(Vec::len))
                .filter(|_| s.mesh.edge_attrs.is_some());
            let rebuilt;
            let mesh = if have == Some(want_dim) {
                &s.mesh
            } else {
                let mut m = s.mesh.clone();
                crate::geometry::build_features(&mut m, model.sinusoids)?;
                rebuilt = m;
                &rebuilt
            };
            let graph = GraphCache::build(mesh)?;
            let feats = model.features_of(mesh)?;
            Ok(PreparedSample { graph, feats, target: s.field.clone() })
        })
        .collect()
}

/// Mean squared error over all nodes of all meshes in the batch.
pub fn loss<T: Scalar>(
    model: &SurrogateModel<T>,
    batch: &[&PreparedSample<T>],
) -> Result<T> {
    let mut sq = T::zero();
    let mut count = 0usize;
    for s in batch {
        let mut rng = stream_rng(0, 0);
        let pred = model.forward(&s.graph, &s.feats, false, &mut rng)?;
        for (p, t) in pred.iter().zip(&s.target) {
            let d = *p - *t;
            sq += d * d;
        }
        count += s.target.len();
    }
    Ok(sq / T::from_usize(count.max(1)))
}

/// Gradient of [`loss`] with respect to every model parameter; exact
/// reverse-mode differentiation of the forward pass.
pub fn backward<T: Scalar>(
    model: &SurrogateModel<T>,
    batch: &[&PreparedSample<T>],
) -> Result<(T, ModelGrads<T>)> {
    let total_nodes: usize = batch.iter().map(|s| s.target.len()).sum();
    let scale = T::two() / T::from_usize(total_nodes.max(1));
    let per_mesh: Vec<(T, ModelGrads<T>)> = batch
        .iter()
        .map(|s| {
            let mut rng = stream_rng(0, 0);
            let (pred, cache) = model.forward_cached(&s.graph, &s.feats, false, &mut rng)?;
            let mut sq = T::zero();
            let upstream: Vec<T> = pred
                .iter()
                .zip(&s.target)
                .map(|(&p, &t)| {
                    let d = p - t;
                    sq += d * d;
                    scale * d
                })
                .collect();
            let (grads, _) = model.backward(&s.graph, &cache, &upstream, false);
            Ok((sq, grads))
        })
        .collect::<Result<_>>()?;
    let mut total_sq = T::zero();
    let mut grads = ModelGrads::zeros_like(model);
    for (sq, g) in &per_mesh {
        total_sq += *sq;
        grads.accumulate(g);
    }
    Ok((total_sq / T::from_usize(total_nodes.max(1)), grads))
}

struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: usize,
}

impl<T: Scalar> AdamState<T> {
    fn new(model: &SurrogateModel<T>) -> Self {
        let shapes: Vec<usize> = model
            .layers
            .iter()
            .flat_map(|l| [l.theta.len(), l.mu.len(), l.log_var.len()])
            .collect();
        Self {
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut SurrogateModel<T>, grads: &ModelGrads<T>, cfg: &TrainConfig<T>) {
        self.step += 1;
        let t = T::from_usize(self.step);
        let bc1 = T::one() - cfg.beta1.powf(t);
        let bc2 = T::one() - cfg.beta2.powf(t);
        let mut slot = 0;
        for (layer, lg) in model.layers.iter_mut().zip(&grads.layers) {
            for (param, grad) in [
                (&mut layer.theta, &lg.theta),
                (&mut layer.mu, &lg.mu),
                (&mut layer.log_var, &lg.log_var),
            ] {
                let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
                slot += 1;
                for i in 0..param.len() {
                    let g = grad[i];
                    m[i] = cfg.beta1 * m[i] + (T::one() - cfg.beta1) * g;
                    v[i] = cfg.beta2 * v[i] + (T::one() - cfg.beta2) * g * g;
                    let mhat = m[i] / bc1;
                    let vhat = v[i] / bc2;
                    param[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
                }
            }
        }
    }
}

/// Trains a freshly initialized model on the dataset. Returns the model
/// and the final-epoch training loss (for `epochs = 0`, the loss of the
/// untouched initialization).
///
/// Per-mesh gradient evaluations within a batch run in parallel; the
/// reduction into the optimizer step is sequential in dataset order, so
/// results are bit-identical across thread counts.
pub fn train<T: Scalar>(
    dataset: &[FieldSample<T>],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig<T>,
) -> Result<(SurrogateModel<T>, T)> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData("empty training dataset".into()));
    }
    cfg.validate()?;
    let mut model = SurrogateModel::init(model_cfg, cfg.dropout_rate, cfg.seed)?;
    if cfg.epochs == 0 {
        let prepared = prepare_dataset(&model, dataset)?;
        let refs: Vec<&PreparedSample<T>> = prepared.iter().collect();
        let l = loss(&model, &refs)?;
        return Ok((model, l));
    }
    // Standardize the output head to the target statistics: the
    // convolution stack has no bias term, so absolute field scale and
    // offset live in the model's affine output transform.
    let total: usize = dataset.iter().map(|s| s.field.len()).sum();
    if total > 0 {
        let mean = dataset
            .iter()
            .flat_map(|s| s.field.iter().copied())
            .sum::<T>()
            / T::from_usize(total);
        let var = dataset
            .iter()
            .flat_map(|s| s.field.iter().map(|&y| (y - mean) * (y - mean)))
            .sum::<T>()
            / T::from_usize(total);
        model.out_shift = mean;
        if var > T::zero() {
            model.out_scale = var.sqrt();
        }
    }
    let prepared = prepare_dataset(&model, dataset)?;

    let dropout_live = cfg.dropout_rate > T::zero();
    let total_nodes_all: usize = prepared.iter().map(|s| s.target.len()).sum();
    let mut adam = AdamState::new(&model);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut epoch_loss = T::zero();
    let base_lr = cfg.learning_rate;
    for epoch in 0..cfg.epochs {
        // Cosine decay to 5% of the base rate over the run.
        let progress = epoch as f64 / cfg.epochs as f64;
        let decay = 0.05 + 0.95 * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        let lr_epoch = base_lr * T::from_f64(decay);
        let mut shuffle_rng = stream_rng(cfg.seed, 0x5487 ^ epoch as u64);
        shuffle(&mut shuffle_rng, &mut order);
        let mut sq_epoch = T::zero();
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let total_nodes: usize = chunk.iter().map(|&i| prepared[i].target.len()).sum();
            let scale = T::two() / T::from_usize(total_nodes.max(1));
            let snapshot = &model;
            let per_mesh: Vec<Result<(T, ModelGrads<T>)>> = chunk
                .par_iter()
                .map(|&i| {
                    let s = &prepared[i];
                    // Dropout stream tied to (epoch, sample) so runs are
                    // reproducible under any parallel schedule.
                    let mut rng = stream_rng(
                        cfg.seed ^ 0xD70D,
                        ((epoch as u64) << 32) | i as u64,
                    );
                    let (pred, cache) =
                        snapshot.forward_cached(&s.graph, &s.feats, dropout_live, &mut rng)?;
                    let mut sq = T::zero();
                    let upstream: Vec<T> = pred
                        .iter()
                        .zip(&s.target)
                        .map(|(&p, &t)| {
                            let d = p - t;
                            sq += d * d;
                            scale * d
                        })
                        .collect();
                    let (grads, _) = snapshot.backward(&s.graph, &cache, &upstream, false);
                    Ok((sq, grads))
                })
                .collect();
            let mut grads = ModelGrads::zeros_like(&model);
            let mut sq_batch = T::zero();
            for r in per_mesh {
                let (sq, g) = r?;
                sq_batch += sq;
                grads.accumulate(&g);
            }
            let batch_loss = sq_batch / T::from_usize(total_nodes.max(1));
            if !batch_loss.is_finite() {
                log::warn!("training diverged at epoch {epoch}, batch {batch_no}");
                return Err(Error::Divergence { epoch });
            }
            sq_epoch += sq_batch;
            let step_cfg = TrainConfig { learning_rate: lr_epoch, ..cfg.clone() };
            adam.update(&mut model, &grads, &step_cfg);
        }
        epoch_loss = sq_epoch / T::from_usize(total_nodes_all.max(1));
    }
    Ok((model, epoch_loss))
}
