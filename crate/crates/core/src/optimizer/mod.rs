//! The Bayesian-optimization engine: acquisition, candidate proposal
//! (GA and gradient descent through the parameterizer), and the outer
//! loop with full run accounting.

mod acquisition;
mod bo;
mod ga;
mod gradient;

pub use acquisition::{
    expected_improvement, normal_cdf, normal_pdf, AcquisitionParams, Direction,
};
pub use bo::{
    acquisition_scores, bo_run, latin_hypercube, BOConfig, GradientProposalConfig,
    IterationRecord, LatentPredictor, PredictorSpec, RunHistory, ScoringMode, Simulate,
    SurrogatePredictor,
};
pub use ga::{ga_propose, GaConfig};
pub use gradient::{gradient_propose, DifferentiableObjective, SurrogateObjective};
