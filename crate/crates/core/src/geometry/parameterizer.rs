//! Differentiable shape parameterizations `P: z -> mesh`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::rbf::RbfDeform;
use crate::geometry::{naca, LatentVector, Mesh};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// A deterministic, differentiable map from latent vectors to meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Parameterizer<T> {
    /// 4-digit airfoil contour; latent is `(m, p, t)`.
    Naca4 { n_panels: usize },
    /// RBF deformation of a fixed base mesh.
    RbfDeform(RbfDeform<T>),
}

impl<T: Scalar> Parameterizer<T> {
    pub fn latent_dim(&self) -> usize {
        match self {
            Self::Naca4 { .. } => 3,
            Self::RbfDeform(r) => r.latent_dim(),
        }
    }

    /// Default latent box for sampling and GA clipping.
    pub fn default_bounds(&self, halfspan: T) -> Vec<(T, T)> {
        match self {
            Self::Naca4 { .. } => naca::naca_bounds(),
            Self::RbfDeform(r) => vec![(-halfspan, halfspan); r.latent_dim()],
        }
    }

    /// Builds the mesh for a latent vector. Deterministic: equal `z`
    /// yields bitwise-equal vertices.
    pub fn build(&self, z: &LatentVector<T>) -> Result<Mesh<T>> {
        match self {
            Self::Naca4 { n_panels } => naca::naca_contour(z, *n_panels),
            Self::RbfDeform(r) => {
                if z.dim() != r.latent_dim() {
                    return Err(Error::Shape(format!(
                        "latent dim {} does not match RBF dim {}",
                        z.dim(),
                        r.latent_dim()
                    )));
                }
                r.deform(z)
            }
        }
    }

    /// Analytic Jacobian of vertex coordinates with respect to `z`,
    /// `(3 |V|) x d`.
    pub fn jacobian(&self, z: &LatentVector<T>) -> Result<DenseMatrix<T>> {
        match self {
            Self::Naca4 { n_panels } => naca::naca_jacobian(z, *n_panels),
            Self::RbfDeform(r) => r.jacobian(),
        }
    }
}
