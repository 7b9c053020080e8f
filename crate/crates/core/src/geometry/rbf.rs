//! RBF free-form deformation of a base mesh.
//!
//! Control points carry prescribed displacements packed into the latent
//! vector; the displacement field over the mesh is the Gaussian-kernel
//! RBF interpolant of those prescriptions. The map `z -> vertices` is
//! linear, so the latent Jacobian is constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LatentVector, Mesh};
use crate::linalg::{lu_solve, DenseMatrix};
use crate::scalar::Scalar;

/// How latent entries map to control-point displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DofLayout<T> {
    /// Two latent entries per control: `(dx, dy)`. Latent dim = 2 * controls.
    Xy,
    /// One latent entry per control, displacing along a fixed unit
    /// direction. Latent dim = controls.
    Directional(Vec<[T; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfDeform<T> {
    pub base: Mesh<T>,
    pub controls: Vec<[T; 2]>,
    pub width: T,
    pub layout: DofLayout<T>,
}

impl<T: Scalar> RbfDeform<T> {
    /// Standard layout: `d/2` control points with 2 displacement dof each.
    pub fn with_xy_controls(base: Mesh<T>, controls: Vec<[T; 2]>, width: T) -> Result<Self> {
        Self::validated(Self { base, controls, width, layout: DofLayout::Xy })
    }

    /// One dof per control along a fixed direction (directions are
    /// normalized here).
    pub fn with_directional_controls(
        base: Mesh<T>,
        controls: Vec<[T; 2]>,
        directions: Vec<[T; 2]>,
        width: T,
    ) -> Result<Self> {
        if directions.len() != controls.len() {
            return Err(Error::Config("one direction per control required".into()));
        }
        let dirs = directions
            .into_iter()
            .map(|d| {
                let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
                if norm <= T::zero() {
                    return Err(Error::Config("zero displacement direction".into()));
                }
                Ok([d[0] / norm, d[1] / norm])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::validated(Self { base, controls, width, layout: DofLayout::Directional(dirs) })
    }

    fn validated(self) -> Result<Self> {
        if self.width <= T::zero() {
            return Err(Error::Config("RBF width must be positive".into()));
        }
        if self.controls.is_empty() {
            return Err(Error::Config("at least one control point required".into()));
        }
        for i in 0..self.controls.len() {
            for j in i + 1..self.controls.len() {
                let (a, b) = (self.controls[i], self.controls[j]);
                if a[0] == b[0] && a[1] == b[1] {
                    return Err(Error::Singular(format!("control points {i} and {j} coincide")));
                }
            }
        }
        Ok(self)
    }

    pub fn latent_dim(&self) -> usize {
        match &self.layout {
            DofLayout::Xy => 2 * self.controls.len(),
            DofLayout::Directional(_) => self.controls.len(),
        }
    }

    fn kernel(&self, r2: T) -> T {
        (-r2 / (self.width * self.width)).exp()
    }

    /// Prescribed displacement at each control for a given latent.
    fn prescriptions(&self, z: &[T]) -> Result<Vec<[T; 2]>> {
        if z.len() != self.latent_dim() {
            return Err(Error::Shape(format!(
                "latent dim {} does not match layout dim {}",
                z.len(),
                self.latent_dim()
            )));
        }
        Ok(match &self.layout {
            DofLayout::Xy => (0..self.controls.len()).map(|i| [z[2 * i], z[2 * i + 1]]).collect(),
            DofLayout::Directional(dirs) => {
                dirs.iter().zip(z).map(|(d, &zi)| [d[0] * zi, d[1] * zi]).collect()
            }
        })
    }

    /// Cardinal weights: `w_i(v) = sum_k phi(|v - c_k|) [Phi^-1]_{k i}`,
    /// one row per mesh vertex. Column i is the response to a unit
    /// displacement prescribed at control i.
    fn cardinal_weights(&self) -> Result<DenseMatrix<T>> {
        let nc = self.controls.len();
        let mut phi = DenseMatrix::zeros(nc, nc);
        for i in 0..nc {
            for j in 0..nc {
                let dx = self.controls[i][0] - self.controls[j][0];
                let dy = self.controls[i][1] - self.controls[j][1];
                phi.set(i, j, self.kernel(dx * dx + dy * dy));
            }
        }
        // Columns of Phi^-1 via one LU solve per unit vector; nc is small.
        let mut inv_cols = Vec::with_capacity(nc);
        for i in 0..nc {
            let mut e = vec![T::zero(); nc];
            e[i] = T::one();
            let col = lu_solve(phi.clone(), e)
                .map_err(|_| Error::Singular("RBF interpolation matrix is singular".into()))?;
            inv_cols.push(col);
        }
        let nv = self.base.vertex_count();
        let mut w = DenseMatrix::zeros(nv, nc);
        for (v, vert) in self.base.vertices.iter().enumerate() {
            for i in 0..nc {
                let mut acc = T::zero();
                for (k, ctrl) in self.controls.iter().enumerate() {
                    let dx = vert[0] - ctrl[0];
                    let dy = vert[1] - ctrl[1];
                    acc += self.kernel(dx * dx + dy * dy) * inv_cols[i][k];
                }
                w.set(v, i, acc);
            }
        }
        Ok(w)
    }

    /// Applies the deformation; connectivity and attributes layout are
    /// inherited from the base mesh (attributes are dropped, rebuild
    /// them with `build_features`).
    pub fn deform(&self, z: &LatentVector<T>) -> Result<Mesh<T>> {
        let disp = self.prescriptions(&z.values)?;
        let w = self.cardinal_weights()?;
        let mut mesh = self.base.clone();
        mesh.node_attrs = None;
        mesh.edge_attrs = None;
        for (v, vert) in mesh.vertices.iter_mut().enumerate() {
            let mut dx = T::zero();
            let mut dy = T::zero();
            for (i, d) in disp.iter().enumerate() {
                dx += w.get(v, i) * d[0];
                dy += w.get(v, i) * d[1];
            }
            vert[0] += dx;
            vert[1] += dy;
        }
        Ok(mesh)
    }

    /// Constant Jacobian of vertex coordinates with respect to `z`,
    /// `(3 |V|) x d`.
    pub fn jacobian(&self) -> Result<DenseMatrix<T>> {
        let w = self.cardinal_weights()?;
        let nv = self.base.vertex_count();
        let d = self.latent_dim();
        let mut jac = DenseMatrix::zeros(3 * nv, d);
        for v in 0..nv {
            match &self.layout {
                DofLayout::Xy => {
                    for i in 0..self.controls.len() {
                        jac.set(3 * v, 2 * i, w.get(v, i));
                        jac.set(3 * v + 1, 2 * i + 1, w.get(v, i));
                    }
                }
                DofLayout::Directional(dirs) => {
                    for (i, dir) in dirs.iter().enumerate() {
                        jac.set(3 * v, i, w.get(v, i) * dir[0]);
                        jac.set(3 * v + 1, i, w.get(v, i) * dir[1]);
                    }
                }
            }
        }
        Ok(jac)
    }
}
