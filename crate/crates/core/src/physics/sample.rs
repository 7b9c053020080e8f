//! Simulation outputs and load definitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::scalar::Scalar;

/// Which performance functional a field belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    AirfoilLift,
    MaxStress,
    Drag,
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TaskKind::AirfoilLift => "airfoil_lift",
            TaskKind::MaxStress => "max_stress",
            TaskKind::Drag => "drag",
        };
        f.write_str(s)
    }
}

/// A mesh with a per-vertex scalar physics field and the derived
/// performance value. Serializes as the mesh schema plus `field`,
/// `performance` and `task` keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct FieldSample<T> {
    #[serde(flatten)]
    pub mesh: Mesh<T>,
    pub field: Vec<T>,
    pub performance: T,
    pub task: TaskKind,
}

impl<T: Scalar> FieldSample<T> {
    /// Checks the per-sample invariants: field length matches the vertex
    /// count and all values are finite.
    pub fn validate(&self) -> Result<()> {
        if self.field.len() != self.mesh.vertex_count() {
            return Err(Error::Shape(format!(
                "field has {} entries for {} vertices",
                self.field.len(),
                self.mesh.vertex_count()
            )));
        }
        if !self.field.iter().all(|v| v.is_finite()) || !self.performance.is_finite() {
            return Err(Error::Shape("non-finite field or performance value".into()));
        }
        Ok(())
    }
}

/// Boundary conditions and material for the plane-stress solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct LoadCase<T> {
    /// Vertices with both displacement dof fixed to zero.
    pub fixed_vertex_ids: Vec<usize>,
    /// Per-vertex nodal forces, one pair per mesh vertex.
    pub loads: Vec<[T; 2]>,
    pub youngs_modulus: T,
    pub poisson_ratio: T,
}

impl<T: Scalar> LoadCase<T> {
    pub fn validate(&self, vertex_count: usize) -> Result<()> {
        let nu = self.poisson_ratio;
        if nu < T::zero() || nu >= T::half() {
            return Err(Error::Config(format!("poisson ratio {nu} outside [0, 0.5)")));
        }
        if self.youngs_modulus <= T::zero() {
            return Err(Error::Config("Young's modulus must be positive".into()));
        }
        if self.loads.len() != vertex_count {
            return Err(Error::Shape(format!(
                "{} load pairs for {} vertices",
                self.loads.len(),
                vertex_count
            )));
        }
        let mut fixed: Vec<usize> = self.fixed_vertex_ids.clone();
        fixed.sort_unstable();
        fixed.dedup();
        // Two distinct fully fixed vertices pin all three rigid modes.
        if fixed.len() < 2 {
            return Err(Error::Constraint(
                "at least two fixed vertices required to remove rigid-body modes".into(),
            ));
        }
        if fixed.iter().any(|&i| i >= vertex_count) {
            return Err(Error::Constraint("fixed vertex id out of range".into()));
        }
        Ok(())
    }
}
