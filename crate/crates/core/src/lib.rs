//! Uncertainty-aware Bayesian shape optimization.
//!
//! Graph-convolutional surrogates emulate built-in physics solvers
//! (a vortex panel method and a plane-stress FEM), quantify their own
//! predictive uncertainty via deep ensembles or MC-dropout, and drive
//! an Expected-Improvement optimization loop over low-dimensional
//! shape parameterizations.
//!
//! The numeric core is generic over the scalar type ([`Scalar`], either
//! `f32` or `f64`); the `*64` aliases below are the concrete types used
//! by the CLI and the test suites.

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod optimizer;
pub mod physics;
pub mod rng;
pub mod scalar;
pub mod surrogate;
pub mod tasks;
pub mod uncertainty;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mesh64 = geometry::Mesh<f64>;
pub type LatentVector64 = geometry::LatentVector<f64>;
pub type Parameterizer64 = geometry::Parameterizer<f64>;
pub type FieldSample64 = physics::FieldSample<f64>;
pub type LoadCase64 = physics::LoadCase<f64>;
pub type SurrogateModel64 = surrogate::SurrogateModel<f64>;
pub type TrainConfig64 = surrogate::TrainConfig<f64>;
pub type UncertainPredictor64 = uncertainty::UncertainPredictor<f64>;
pub type BOConfig64 = optimizer::BOConfig<f64>;
pub type RunHistory64 = optimizer::RunHistory<f64>;
pub type GpModel64 = baselines::GpModel<f64>;
