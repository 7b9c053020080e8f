//! Ground-truth simulators and performance functionals.

mod fem;
mod functionals;
mod panel;
mod sample;

pub use fem::{fem_displacements, fem_plane_stress, von_mises};
pub use functionals::{drag_integral, performance, r_aux, r_aux_gradient, Functional};
pub use panel::panel_solve;
pub use sample::{FieldSample, LoadCase, TaskKind};
