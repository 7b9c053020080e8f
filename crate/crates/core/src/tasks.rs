//! Ready-to-run task presets: the airfoil lift task (NACA latent +
//! panel method) and the 2D knuckle stress task (RBF-deformed ring +
//! plane-stress FEM).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::rbf::RbfDeform;
use crate::geometry::{knuckle_preset, LatentVector, Parameterizer};
use crate::optimizer::{Direction, Simulate};
use crate::physics::{fem_plane_stress, panel_solve, FieldSample, Functional, LoadCase};
use crate::scalar::Scalar;

/// Which solver closes the loop for a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
#[serde(rename_all = "snake_case")]
pub enum SolverKind<T> {
    Panel { alpha: T, v_inf: T },
    PlaneStress { case: LoadCase<T> },
}

/// A complete optimization task: parameterizer, latent box, performance
/// functional, direction, and ground-truth solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct TaskSetup<T> {
    pub name: String,
    pub parameterizer: Parameterizer<T>,
    pub bounds: Vec<(T, T)>,
    pub functional: Functional<T>,
    pub direction: Direction,
    pub solver: SolverKind<T>,
}

impl<T: Scalar> Simulate<T> for TaskSetup<T> {
    fn simulate(&self, z: &LatentVector<T>) -> Result<FieldSample<T>> {
        let mesh = self.parameterizer.build(z)?;
        match &self.solver {
            SolverKind::Panel { alpha, v_inf } => panel_solve(&mesh, *alpha, *v_inf),
            SolverKind::PlaneStress { case } => fem_plane_stress(&mesh, case),
        }
    }
}

/// Airfoil lift maximization over the 3-dim NACA latent at a fixed
/// angle of attack (default 4 degrees).
pub fn airfoil_task<T: Scalar>(n_panels: usize, alpha: T, v_inf: T) -> TaskSetup<T> {
    let parameterizer = Parameterizer::Naca4 { n_panels };
    let bounds = parameterizer.default_bounds(T::zero());
    TaskSetup {
        name: "airfoil".into(),
        parameterizer,
        bounds,
        functional: Functional::AirfoilLift { alpha },
        direction: Direction::Maximize,
        solver: SolverKind::Panel { alpha, v_inf },
    }
}

pub fn default_airfoil_task<T: Scalar>() -> TaskSetup<T> {
    airfoil_task(64, T::from_f64(4.0f64.to_radians()), T::one())
}

/// Knuckle stress minimization: nine directional RBF controls shape the
/// ring/handle joint; the inner circle is fixed and a horizontal force
/// pulls the handle tip.
pub fn knuckle2d_task<T: Scalar>() -> Result<TaskSetup<T>> {
    let preset = knuckle_preset::<T>();
    let nv = preset.mesh.vertex_count();
    let rbf = RbfDeform::with_directional_controls(
        preset.mesh,
        preset.controls,
        preset.directions,
        preset.rbf_width,
    )?;
    let halfspan = T::from_f64(0.12);
    let mut loads = vec![[T::zero(); 2]; nv];
    let tip_force = T::from_f64(1.0e4);
    let share = tip_force / T::from_usize(preset.tip.len());
    for &i in &preset.tip {
        loads[i][0] = share;
    }
    let case = LoadCase {
        fixed_vertex_ids: preset.fixed,
        loads,
        youngs_modulus: T::from_f64(200e9),
        poisson_ratio: T::from_f64(0.3),
    };
    let parameterizer = Parameterizer::RbfDeform(rbf);
    let bounds = parameterizer.default_bounds(halfspan);
    Ok(TaskSetup {
        name: "knuckle2d".into(),
        parameterizer,
        bounds,
        functional: Functional::MaxStress,
        direction: Direction::Minimize,
        solver: SolverKind::PlaneStress { case },
    })
}
