//! Comparison methods: Kriging (GP) response surfaces and the
//! deterministic / random baselines.

mod gp;
mod runs;

pub use gp::{gp_fit, GpModel};
pub use runs::{deterministic_gnn_run, kriging_bo_run, random_search_run};
