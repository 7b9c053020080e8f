//! Gradient-descent candidate proposal through the differentiable
//! parameterizer: descends `objective(z) + lambda * r_aux(z)` from a
//! starting latent, clipping every step to the bounds.

use crate::error::Result;
use crate::geometry::{LatentVector, Parameterizer};
use crate::optimizer::acquisition::Direction;
use crate::physics::r_aux_gradient;
use crate::scalar::Scalar;
use crate::uncertainty::UncertainPredictor;

/// An objective with an analytic (or chained) latent gradient.
pub trait DifferentiableObjective<T: Scalar> {
    fn value_and_grad(&self, z: &[T]) -> Result<(T, Vec<T>)>;
}

impl<T: Scalar, F> DifferentiableObjective<T> for F
where
    F: Fn(&[T]) -> Result<(T, Vec<T>)>,
{
    fn value_and_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        self(z)
    }
}

/// Runs `steps` of projected gradient descent from `z0` and returns the
/// final point. `lambda` weights the nearest-neighbor penalty computed
/// against `training_z` with neighborhood size `k`.
#[allow(clippy::too_many_arguments)]
pub fn gradient_propose<T: Scalar>(
    z0: &LatentVector<T>,
    objective: &impl DifferentiableObjective<T>,
    steps: usize,
    step_size: T,
    lambda: T,
    training_z: &[Vec<T>],
    k: usize,
) -> Result<LatentVector<T>> {
    let mut z = z0.clone();
    for _ in 0..steps {
        let (_, mut grad) = objective.value_and_grad(&z.values)?;
        if lambda > T::zero() {
            let aux = r_aux_gradient(&z.values, training_z, k)?;
            for (g, a) in grad.iter_mut().zip(&aux) {
                *g += lambda * *a;
            }
        }
        let moved: Vec<T> =
            z.values.iter().zip(&grad).map(|(&v, &g)| v - step_size * g).collect();
        z = LatentVector::clamped(moved, z.bounds.clone());
    }
    Ok(z)
}

/// The surrogate-backed objective used by the optimization loop: the
/// (sign-adjusted) ensemble mean through the parameterizer, with exact
/// gradients chained through the performance functional, the network's
/// input-feature gradients, the feature construction, and the
/// parameterizer Jacobian.
pub struct SurrogateObjective<'a, T> {
    pub predictor: &'a UncertainPredictor<T>,
    pub parameterizer: &'a Parameterizer<T>,
    pub bounds: &'a [(T, T)],
    pub direction: Direction,
    /// Dropout stream for MC-dropout members (ignored by ensembles).
    pub seed: u64,
}

impl<T: Scalar> DifferentiableObjective<T> for SurrogateObjective<'_, T> {
    fn value_and_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        use crate::geometry::build_features;
        use crate::rng::stream_rng;
        use crate::surrogate::GraphCache;
        use crate::uncertainty::PredictMode;

        let zv = LatentVector::clamped(z.to_vec(), self.bounds.to_vec());
        let mut mesh = self.parameterizer.build(&zv)?;
        build_features(&mut mesh, self.predictor.sinusoids())?;
        let graph = GraphCache::build(&mesh)?;
        let feats = self.predictor.members[0].features_of(&mesh)?;
        let jac = self.parameterizer.jacobian(&zv)?;
        let functional = &self.predictor.functional;
        let n_passes = match self.predictor.mode {
            PredictMode::Ensemble => self.predictor.members.len(),
            PredictMode::McDropout => self.predictor.passes,
        };
        let mut value = T::zero();
        let mut dz = vec![T::zero(); z.len()];
        for pass in 0..n_passes {
            let (member, dropout, mut rng) = match self.predictor.mode {
                PredictMode::Ensemble => (&self.predictor.members[pass], false, stream_rng(0, 0)),
                PredictMode::McDropout => {
                    (&self.predictor.members[0], true, stream_rng(self.seed, pass as u64))
                }
            };
            let (field, cache) = member.forward_cached(&graph, &feats, dropout, &mut rng)?;
            let r = functional.eval(&mesh, &field)?;
            value += r;
            // dR/dfield drives the network input gradients.
            let upstream = functional.field_gradient(&mesh, &field)?;
            let (_, input_grads) = member.backward(&graph, &cache, &upstream, true);
            let ig = input_grads.expect("input gradients requested");
            // Vertex gradients: functional geometry term + node features
            // (coordinates and sinusoid channels) + edge attributes.
            let mut vgrad = functional.vertex_gradient(&mesh, &field)?;
            let m = member.input_dim();
            let sin_count = member.sinusoids;
            for (v, vert) in mesh.vertices.iter().enumerate() {
                for c in 0..2 {
                    let mut acc = ig.node_feats[v * m + c];
                    for a in 1..=sin_count {
                        let freq = T::from_usize(a);
                        acc += ig.node_feats[v * m + 3 * a + c] * freq * (freq * vert[c]).cos();
                    }
                    vgrad[v][c] += acc;
                }
            }
            for (e, g) in mesh.edges.iter().zip(&ig.edge_attrs) {
                for c in 0..2 {
                    vgrad[e[1]][c] += g[c];
                    vgrad[e[0]][c] -= g[c];
                }
            }
            let flat: Vec<T> = mesh
                .vertices
                .iter()
                .enumerate()
                .flat_map(|(v, _)| [vgrad[v][0], vgrad[v][1], T::zero()])
                .collect();
            let pass_dz = jac.mat_t_vec(&flat);
            for (d, g) in dz.iter_mut().zip(&pass_dz) {
                *d += *g;
            }
        }
        let inv = T::one() / T::from_usize(n_passes);
        let sign = match self.direction {
            Direction::Maximize => -T::one(),
            Direction::Minimize => T::one(),
        };
        // Descending this objective improves the task metric.
        let obj = sign * value * inv;
        let grad = dz.iter().map(|&g| sign * g * inv).collect();
        Ok((obj, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_returns_start() {
        let objective = |_z: &[f64]| Ok((1.0, vec![0.0, 0.0]));
        let z0 = LatentVector::new(vec![0.2, -0.3], vec![(-1.0, 1.0); 2]).unwrap();
        let out = gradient_propose(&z0, &objective, 50, 0.1, 0.0, &[], 5).unwrap();
        assert_eq!(out.values, z0.values);
    }

    #[test]
    fn converges_on_a_convex_quadratic() {
        let c = [0.4, -0.2, 0.6];
        let objective = move |z: &[f64]| {
            let value: f64 = z.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            let grad: Vec<f64> = z.iter().zip(&c).map(|(a, b)| 2.0 * (a - b)).collect();
            Ok((value, grad))
        };
        let z0 = LatentVector::new(vec![-0.9, 0.9, -0.9], vec![(-1.0, 1.0); 3]).unwrap();
        let out = gradient_propose(&z0, &objective, 400, 0.05, 0.0, &[], 5).unwrap();
        for (v, t) in out.values.iter().zip(&c) {
            assert_relative_eq!(v, t, epsilon = 1e-3);
        }
    }

    #[test]
    fn large_penalty_keeps_novelty_bounded() {
        // A strong pull away from the data against a large lambda: the
        // final point must not be farther from the training set than the
        // start.
        let objective = |_z: &[f64]| Ok((0.0, vec![-1.0, -1.0])); // pushes +z
        let training: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![-0.1, 0.0],
            vec![0.0, -0.1],
        ];
        let z0 = LatentVector::new(vec![0.05, 0.05], vec![(-2.0, 2.0); 2]).unwrap();
        let out = gradient_propose(&z0, &objective, 300, 0.005, 10.0, &training, 5).unwrap();
        let r0 = crate::physics::r_aux(&z0.values, &training, 5).unwrap();
        let r1 = crate::physics::r_aux(&out.values, &training, 5).unwrap();
        assert!(r1 <= r0 + 0.15, "penalty failed to dominate: {r1} vs {r0}");
    }

    #[test]
    fn steps_stay_clipped_to_bounds() {
        let objective = |_z: &[f64]| Ok((0.0, vec![-100.0]));
        let z0 = LatentVector::new(vec![0.0], vec![(-0.5, 0.5)]).unwrap();
        let out = gradient_propose(&z0, &objective, 10, 1.0, 0.0, &[], 5).unwrap();
        assert_eq!(out.values[0], 0.5);
    }
}
