//! Performance functionals `R(y)` mapping a per-vertex field to the
//! scalar a task optimizes, plus the latent-space novelty penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{outward_normal_scaled, Mesh};
use crate::physics::sample::{FieldSample, TaskKind};
use crate::scalar::Scalar;

/// A performance functional with its parameters. The lift functional
/// carries the angle of attack because the lift direction depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional<T> {
    AirfoilLift { alpha: T },
    MaxStress,
    Drag,
}

impl<T: Scalar> Functional<T> {
    pub fn kind(&self) -> TaskKind {
        match self {
            Functional::AirfoilLift { .. } => TaskKind::AirfoilLift,
            Functional::MaxStress => TaskKind::MaxStress,
            Functional::Drag => TaskKind::Drag,
        }
    }

    /// Evaluates `R(field)` on a mesh.
    pub fn eval(&self, mesh: &Mesh<T>, field: &[T]) -> Result<T> {
        if field.is_empty() {
            return Err(Error::Shape("empty field".into()));
        }
        if field.len() != mesh.vertex_count() {
            return Err(Error::Shape(format!(
                "field has {} entries for {} vertices",
                field.len(),
                mesh.vertex_count()
            )));
        }
        match self {
            Functional::MaxStress => {
                Ok(field.iter().copied().fold(T::neg_infinity(), T::max))
            }
            Functional::Drag => drag_integral_field(mesh, field, [T::one(), T::zero()]),
            Functional::AirfoilLift { alpha } => {
                let lift_dir = [-alpha.sin(), alpha.cos()];
                let force = -drag_integral_field(mesh, field, lift_dir)?;
                Ok(force / chord(mesh))
            }
        }
    }

    /// dR/dfield, one entry per vertex. For `MaxStress` this is the
    /// subgradient: an indicator on the first maximal vertex.
    pub fn field_gradient(&self, mesh: &Mesh<T>, field: &[T]) -> Result<Vec<T>> {
        let mut grad = vec![T::zero(); field.len()];
        match self {
            Functional::MaxStress => {
                let mut best = 0usize;
                for (i, &v) in field.iter().enumerate() {
                    if v > field[best] {
                        best = i;
                    }
                }
                grad[best] = T::one();
            }
            Functional::Drag => {
                accumulate_integral_field_grad(mesh, [T::one(), T::zero()], T::one(), &mut grad)?;
            }
            Functional::AirfoilLift { alpha } => {
                let lift_dir = [-alpha.sin(), alpha.cos()];
                let scale = -T::one() / chord(mesh);
                accumulate_integral_field_grad(mesh, lift_dir, scale, &mut grad)?;
            }
        }
        Ok(grad)
    }

    /// dR/dvertex at fixed field (the integral weights depend on the
    /// panel geometry), flattened `[dx, dy]` per vertex. Zero for
    /// `MaxStress`. The airfoil chord is treated as constant, which is
    /// exact for the NACA parameterization.
    pub fn vertex_gradient(&self, mesh: &Mesh<T>, field: &[T]) -> Result<Vec<[T; 2]>> {
        let mut grad = vec![[T::zero(); 2]; mesh.vertex_count()];
        match self {
            Functional::MaxStress => {}
            Functional::Drag => {
                accumulate_integral_vertex_grad(mesh, field, [T::one(), T::zero()], T::one(), &mut grad)?;
            }
            Functional::AirfoilLift { alpha } => {
                let lift_dir = [-alpha.sin(), alpha.cos()];
                let scale = -T::one() / chord(mesh);
                accumulate_integral_vertex_grad(mesh, field, lift_dir, scale, &mut grad)?;
            }
        }
        Ok(grad)
    }
}

fn chord<T: Scalar>(mesh: &Mesh<T>) -> T {
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for v in &mesh.vertices {
        lo = lo.min(v[0]);
        hi = hi.max(v[0]);
    }
    hi - lo
}

/// Midpoint-rule surface integral of `field * (n . dir)` over a closed
/// contour: per panel, the field value at the midpoint is the average of
/// the endpoint values and `n * ds` is the outward-rotated edge vector.
fn drag_integral_field<T: Scalar>(mesh: &Mesh<T>, field: &[T], dir: [T; 2]) -> Result<T> {
    let cycle = mesh.contour_cycle()?;
    let n = cycle.len();
    let mut acc = T::zero();
    for i in 0..n {
        let (a, b) = (cycle[i], cycle[(i + 1) % n]);
        let avg = (field[a] + field[b]) * T::half();
        let ns = outward_normal_scaled(mesh.vertices[a], mesh.vertices[b]);
        acc += avg * (ns[0] * dir[0] + ns[1] * dir[1]);
    }
    Ok(acc)
}

fn accumulate_integral_field_grad<T: Scalar>(
    mesh: &Mesh<T>,
    dir: [T; 2],
    scale: T,
    grad: &mut [T],
) -> Result<()> {
    let cycle = mesh.contour_cycle()?;
    let n = cycle.len();
    for i in 0..n {
        let (a, b) = (cycle[i], cycle[(i + 1) % n]);
        let ns = outward_normal_scaled(mesh.vertices[a], mesh.vertices[b]);
        let w = scale * T::half() * (ns[0] * dir[0] + ns[1] * dir[1]);
        grad[a] += w;
        grad[b] += w;
    }
    Ok(())
}

fn accumulate_integral_vertex_grad<T: Scalar>(
    mesh: &Mesh<T>,
    field: &[T],
    dir: [T; 2],
    scale: T,
    grad: &mut [[T; 2]],
) -> Result<()> {
    let cycle = mesh.contour_cycle()?;
    let n = cycle.len();
    for i in 0..n {
        let (a, b) = (cycle[i], cycle[(i + 1) % n]);
        let avg = (field[a] + field[b]) * T::half();
        // n*ds . dir = (yb - ya) dx - (xb - xa) dy.
        grad[a][0] += scale * avg * dir[1];
        grad[a][1] -= scale * avg * dir[0];
        grad[b][0] -= scale * avg * dir[1];
        grad[b][1] += scale * avg * dir[0];
    }
    Ok(())
}

/// Surface integral of `field * (n . flow_dir)` over the sample's closed
/// contour; the drag approximation when the field is pressure.
pub fn drag_integral<T: Scalar>(sample: &FieldSample<T>, flow_dir: [T; 2]) -> Result<T> {
    sample.validate()?;
    drag_integral_field(&sample.mesh, &sample.field, flow_dir)
}

/// Task-routed performance `r = R(y)`.
pub fn performance<T: Scalar>(sample: &FieldSample<T>, task: &Functional<T>) -> Result<T> {
    if task.kind() != sample.task {
        return Err(Error::Config(format!(
            "sample was produced for task {}, asked to evaluate {}",
            sample.task,
            task.kind()
        )));
    }
    task.eval(&sample.mesh, &sample.field)
}

/// Mean Euclidean distance from `z` to its `k` closest training latents.
pub fn r_aux<T: Scalar>(z: &[T], training: &[Vec<T>], k: usize) -> Result<T> {
    if training.len() < k {
        return Err(Error::InsufficientData(format!(
            "need at least {k} training latents, have {}",
            training.len()
        )));
    }
    let mut dists: Vec<T> = training
        .iter()
        .map(|t| {
            z.iter().zip(t).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
        })
        .collect();
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    Ok(dists.iter().take(k).copied().sum::<T>() / T::from_usize(k))
}

/// Subgradient of [`r_aux`]: mean of unit vectors toward `z` from its
/// `k` nearest training latents (zero contribution at zero distance).
pub fn r_aux_gradient<T: Scalar>(z: &[T], training: &[Vec<T>], k: usize) -> Result<Vec<T>> {
    if training.len() < k {
        return Err(Error::InsufficientData(format!(
            "need at least {k} training latents, have {}",
            training.len()
        )));
    }
    let mut dists: Vec<(T, usize)> = training
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let d = z.iter().zip(t).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
            (d, i)
        })
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let mut grad = vec![T::zero(); z.len()];
    let inv_k = T::one() / T::from_usize(k);
    for &(d, idx) in dists.iter().take(k) {
        if d > T::zero() {
            for (g, (&zi, &ti)) in grad.iter_mut().zip(z.iter().zip(&training[idx])) {
                *g += inv_k * (zi - ti) / d;
            }
        }
    }
    Ok(grad)
}
