//! The Bayesian-optimization outer loop.
//!
//! One engine drives every method variant: simulate an initial
//! latin-hypercube design, then per iteration (1) refit the predictor on
//! all data, (2) propose candidates with the GA (plus optional gradient
//! proposals through the parameterizer), (3) score them with the
//! acquisition function, (4) simulate the retained best and grow the
//! dataset. Failures are discarded and logged; call accounting is exact.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{gp_fit, GpModel};
use crate::error::{Error, Result};
use crate::geometry::{build_features, LatentVector, Parameterizer};
use crate::optimizer::acquisition::{
    expected_improvement, AcquisitionParams, Direction,
};
use crate::optimizer::ga::{ga_propose, GaConfig};
use crate::optimizer::gradient::{gradient_propose, SurrogateObjective};
use crate::physics::{FieldSample, Functional};
use crate::rng::{stream_rng, uniform};
use crate::scalar::Scalar;
use crate::surrogate::{train, ModelConfig, TrainConfig};
use crate::uncertainty::{fit, predict_stats, PredictMode, UncertainPredictor};

/// A ground-truth oracle: latent in, simulated field sample out.
pub trait Simulate<T: Scalar>: Sync {
    fn simulate(&self, z: &LatentVector<T>) -> Result<FieldSample<T>>;
}

impl<T: Scalar, F> Simulate<T> for F
where
    F: Fn(&LatentVector<T>) -> Result<FieldSample<T>> + Sync,
{
    fn simulate(&self, z: &LatentVector<T>) -> Result<FieldSample<T>> {
        self(z)
    }
}

/// Surrogate abstraction the scoring layer sees. `mean` must not touch
/// the variance path: the deterministic baseline is defined by never
/// requesting one.
pub trait LatentPredictor<T: Scalar>: Sync {
    fn mean(&self, z: &LatentVector<T>) -> Result<T>;
    fn mean_and_var(&self, z: &LatentVector<T>) -> Result<(T, T)>;
}

/// Mesh-building adapter: runs the uncertain predictor through the
/// parameterizer.
pub struct SurrogatePredictor<'a, T> {
    pub predictor: &'a UncertainPredictor<T>,
    pub parameterizer: &'a Parameterizer<T>,
    /// Dropout stream (common random numbers within one iteration).
    pub seed: u64,
}

impl<T: Scalar> LatentPredictor<T> for SurrogatePredictor<'_, T> {
    fn mean(&self, z: &LatentVector<T>) -> Result<T> {
        let (estimates, _) = self.predictor.member_estimates(z, self.parameterizer, self.seed)?;
        Ok(estimates.iter().copied().sum::<T>() / T::from_usize(estimates.len()))
    }

    fn mean_and_var(&self, z: &LatentVector<T>) -> Result<(T, T)> {
        let (mu, var, _) = predict_stats(self.predictor, z, self.parameterizer, self.seed)?;
        Ok((mu, var))
    }
}

impl<T: Scalar> LatentPredictor<T> for GpModel<T> {
    fn mean(&self, z: &LatentVector<T>) -> Result<T> {
        Ok(self.predict(&z.values).0)
    }

    fn mean_and_var(&self, z: &LatentVector<T>) -> Result<(T, T)> {
        Ok(self.predict(&z.values))
    }
}

/// How proposals are ranked for retention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringMode {
    /// Expected Improvement from mean and variance.
    ExpectedImprovement,
    /// Predicted value only (deterministic-surrogate baseline).
    PredictedValue,
}

/// Scores candidates for retention; ranking happens in the maximize
/// convention. `PredictedValue` calls only [`LatentPredictor::mean`].
pub fn acquisition_scores<T: Scalar>(
    predictor: &dyn LatentPredictor<T>,
    mode: ScoringMode,
    direction: Direction,
    candidates: &[LatentVector<T>],
    params: &AcquisitionParams<T>,
) -> Result<Vec<T>> {
    candidates
        .par_iter()
        .map(|z| match mode {
            ScoringMode::ExpectedImprovement => {
                let (mu, var) = predictor.mean_and_var(z)?;
                Ok(expected_improvement(direction.signed(mu), var.max(T::zero()).sqrt(), params))
            }
            ScoringMode::PredictedValue => Ok(direction.signed(predictor.mean(z)?)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>, GradientProposalConfig<T>: Default"))]
#[serde(default)]
pub struct GradientProposalConfig<T> {
    pub enabled: bool,
    pub steps: usize,
    pub step_size: T,
}

impl<T: Scalar> Default for GradientProposalConfig<T> {
    fn default() -> Self {
        Self { enabled: false, steps: 20, step_size: T::from_f64(0.02) }
    }
}

/// Which surrogate backs the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
#[serde(rename_all = "snake_case")]
pub enum PredictorSpec<T> {
    Ensemble { members: usize, model: ModelConfig, train: TrainConfig<T> },
    McDropout { passes: usize, model: ModelConfig, train: TrainConfig<T> },
    SingleGnn { model: ModelConfig, train: TrainConfig<T> },
    Kriging { noise_var: T },
    RandomSearch,
}

impl<T> PredictorSpec<T> {
    pub fn method_name(&self) -> &'static str {
        match self {
            PredictorSpec::Ensemble { .. } => "ens",
            PredictorSpec::McDropout { .. } => "mcd",
            PredictorSpec::SingleGnn { .. } => "gnn",
            PredictorSpec::Kriging { .. } => "krig",
            PredictorSpec::RandomSearch => "random",
        }
    }

    fn sinusoids(&self) -> Option<usize> {
        match self {
            PredictorSpec::Ensemble { model, .. }
            | PredictorSpec::McDropout { model, .. }
            | PredictorSpec::SingleGnn { model, .. } => Some(model.sinusoids),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct BOConfig<T> {
    pub init_dataset_size: usize,
    pub iterations: usize,
    pub proposals_per_iter: usize,
    pub retained_per_iter: usize,
    pub ga: GaConfig<T>,
    pub gradient_proposal: GradientProposalConfig<T>,
    pub predictor: PredictorSpec<T>,
    /// Weight of the nearest-neighbor novelty penalty in gradient
    /// proposals.
    pub r_aux_weight: T,
    pub r_aux_k: usize,
    /// Exploration margin as a fraction of the dataset value range.
    pub epsilon_frac: T,
    pub seed: u64,
    /// Stop early once the best value passes this (task direction).
    pub target: Option<T>,
}

impl<T: Scalar> BOConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.init_dataset_size == 0 || self.proposals_per_iter == 0 || self.retained_per_iter == 0
        {
            return Err(Error::Config("all counts must be >= 1".into()));
        }
        if self.retained_per_iter > self.proposals_per_iter {
            return Err(Error::Config(format!(
                "retained ({}) must not exceed proposals ({})",
                self.retained_per_iter, self.proposals_per_iter
            )));
        }
        if self.epsilon_frac < T::zero() || self.r_aux_weight < T::zero() {
            return Err(Error::Config("epsilon_frac and r_aux_weight must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct IterationRecord<T> {
    /// 0 is the initial design.
    pub iteration: usize,
    /// Cumulative successful simulator calls.
    pub sim_calls: usize,
    /// Best task value so far.
    pub best_r: T,
    /// Mean acquisition value of the retained candidates (0 where the
    /// method has none).
    pub mean_ei_retained: T,
    /// Measured wall time of the iteration; informational only and
    /// excluded from deterministic artifacts.
    pub wall_ms: u64,
    pub retained_z: Vec<Vec<T>>,
    pub acquisition_values: Vec<T>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RunHistory<T> {
    pub method: String,
    pub iterations: Vec<IterationRecord<T>>,
    pub best_z: Vec<T>,
    pub best_r: T,
    pub sim_calls: usize,
    pub failures: usize,
}

impl<T: Scalar> RunHistory<T> {
    /// Checks the structural invariants: best-so-far is monotone in the
    /// optimization direction and call counts strictly increase.
    pub fn validate(&self, direction: Direction) -> Result<()> {
        for w in self.iterations.windows(2) {
            if direction.signed(w[1].best_r) < direction.signed(w[0].best_r) {
                return Err(Error::Config("best-so-far worsened across iterations".into()));
            }
            if w[1].sim_calls <= w[0].sim_calls {
                return Err(Error::Config("simulator call count must strictly increase".into()));
            }
        }
        Ok(())
    }
}

/// Latin-hypercube design over the bounds: one sample per stratum and
/// dimension, strata shuffled independently per dimension.
pub fn latin_hypercube<T: Scalar>(
    bounds: &[(T, T)],
    n: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<LatentVector<T>> {
    let d = bounds.len();
    let mut strata: Vec<Vec<usize>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        crate::rng::shuffle(rng, &mut perm);
        strata.push(perm);
    }
    (0..n)
        .map(|i| {
            let values = bounds
                .iter()
                .enumerate()
                .map(|(dim, &(lo, hi))| {
                    let u = uniform(rng, T::zero(), T::one());
                    let frac = (T::from_usize(strata[dim][i]) + u) / T::from_usize(n);
                    lo + (hi - lo) * frac
                })
                .collect();
            LatentVector { values, bounds: bounds.to_vec() }
        })
        .collect()
}

struct Observation<T> {
    z: LatentVector<T>,
    sample: FieldSample<T>,
}

fn simulate_batch<T: Scalar>(
    simulator: &dyn Simulate<T>,
    zs: &[LatentVector<T>],
    sinusoids: Option<usize>,
) -> (Vec<Observation<T>>, usize) {
    let results: Vec<Result<FieldSample<T>>> =
        zs.par_iter().map(|z| simulator.simulate(z)).collect();
    let mut observations = Vec::new();
    let mut failures = 0usize;
    for (z, r) in zs.iter().zip(results) {
        match r {
            Ok(mut sample) => {
                if let Some(a) = sinusoids {
                    if build_features(&mut sample.mesh, a).is_err() {
                        failures += 1;
                        continue;
                    }
                }
                observations.push(Observation { z: z.clone(), sample });
            }
            Err(e) => {
                log::debug!("simulation failed at z = {:?}: {e}", z.values);
                failures += 1;
            }
        }
    }
    (observations, failures)
}

enum FittedPredictor<T> {
    Surrogate(UncertainPredictor<T>),
    Gp(GpModel<T>),
    None,
}

/// Runs the optimization loop. The same engine serves the uncertainty
/// methods and all baselines; see the wrappers in [`crate::baselines`].
pub fn bo_run<T: Scalar>(
    cfg: &BOConfig<T>,
    parameterizer: &Parameterizer<T>,
    bounds: &[(T, T)],
    functional: Functional<T>,
    direction: Direction,
    simulator: &dyn Simulate<T>,
) -> Result<RunHistory<T>> {
    cfg.validate()?;
    let sinusoids = cfg.predictor.sinusoids();
    let t_start = Instant::now();

    // Initial design.
    let mut lhs_rng = stream_rng(cfg.seed, 0x1A5);
    let design = latin_hypercube(bounds, cfg.init_dataset_size, &mut lhs_rng);
    let (mut observations, init_failures) = simulate_batch(simulator, &design, sinusoids);
    let mut total_failures = init_failures;
    if observations.is_empty() {
        return Err(Error::InsufficientData(
            "every simulation in the initial design failed".into(),
        ));
    }

    let best_of = |obs: &[Observation<T>]| -> (usize, T) {
        let mut best = 0usize;
        for (i, o) in obs.iter().enumerate() {
            if direction.signed(o.sample.performance) > direction.signed(obs[best].sample.performance)
            {
                best = i;
            }
        }
        (best, obs[best].sample.performance)
    };
    let target_reached = |best_r: T| -> bool {
        cfg.target
            .map(|t| direction.signed(best_r) >= direction.signed(t))
            .unwrap_or(false)
    };

    let (_, mut best_r) = best_of(&observations);
    let mut history = RunHistory {
        method: cfg.predictor.method_name().to_string(),
        iterations: vec![IterationRecord {
            iteration: 0,
            sim_calls: observations.len(),
            best_r,
            mean_ei_retained: T::zero(),
            wall_ms: t_start.elapsed().as_millis() as u64,
            retained_z: observations.iter().map(|o| o.z.values.clone()).collect(),
            acquisition_values: Vec::new(),
            failures: init_failures,
        }],
        best_z: Vec::new(),
        best_r,
        sim_calls: observations.len(),
        failures: init_failures,
    };

    for it in 1..=cfg.iterations {
        if target_reached(best_r) {
            break;
        }
        let t_iter = Instant::now();
        let iter_seed = cfg.seed ^ (0x1_0000 + it as u64);

        // (1) Fit the predictor on everything seen so far.
        let fitted = match &cfg.predictor {
            PredictorSpec::Ensemble { members, model, train: tc } => {
                let data: Vec<FieldSample<T>> =
                    observations.iter().map(|o| o.sample.clone()).collect();
                FittedPredictor::Surrogate(fit(
                    &data,
                    PredictMode::Ensemble,
                    *members,
                    model,
                    tc,
                    functional,
                )?)
            }
            PredictorSpec::McDropout { passes, model, train: tc } => {
                let data: Vec<FieldSample<T>> =
                    observations.iter().map(|o| o.sample.clone()).collect();
                FittedPredictor::Surrogate(fit(
                    &data,
                    PredictMode::McDropout,
                    *passes,
                    model,
                    tc,
                    functional,
                )?)
            }
            PredictorSpec::SingleGnn { model, train: tc } => {
                let data: Vec<FieldSample<T>> =
                    observations.iter().map(|o| o.sample.clone()).collect();
                let (single, _) = train(&data, model, tc)?;
                FittedPredictor::Surrogate(UncertainPredictor {
                    mode: PredictMode::Ensemble,
                    members: vec![single],
                    passes: 0,
                    functional,
                })
            }
            PredictorSpec::Kriging { noise_var } => {
                let inputs: Vec<Vec<T>> =
                    observations.iter().map(|o| o.z.values.clone()).collect();
                let targets: Vec<T> =
                    observations.iter().map(|o| o.sample.performance).collect();
                FittedPredictor::Gp(gp_fit(inputs, targets, *noise_var)?)
            }
            PredictorSpec::RandomSearch => FittedPredictor::None,
        };

        // Acquisition parameters from the current dataset (maximize
        // convention).
        let signed: Vec<T> =
            observations.iter().map(|o| direction.signed(o.sample.performance)).collect();
        let (lo, hi) = signed.iter().fold((T::infinity(), T::neg_infinity()), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
        let params = AcquisitionParams { epsilon: cfg.epsilon_frac * (hi - lo), best_value: hi };

        // (2) Propose candidates.
        let scoring_mode = match &cfg.predictor {
            PredictorSpec::SingleGnn { .. } => ScoringMode::PredictedValue,
            _ => ScoringMode::ExpectedImprovement,
        };
        let mut candidates: Vec<LatentVector<T>> = match &fitted {
            FittedPredictor::None => {
                let mut rng = stream_rng(cfg.seed, 0x2B ^ (it as u64) << 8);
                (0..cfg.retained_per_iter)
                    .map(|_| LatentVector {
                        values: bounds
                            .iter()
                            .map(|&(lo, hi)| uniform(&mut rng, lo, hi))
                            .collect(),
                        bounds: bounds.to_vec(),
                    })
                    .collect()
            }
            FittedPredictor::Surrogate(p) => {
                let scorer =
                    SurrogatePredictor { predictor: p, parameterizer, seed: iter_seed };
                let score = |zv: &[T]| -> T {
                    let z = LatentVector { values: zv.to_vec(), bounds: bounds.to_vec() };
                    let r = match scoring_mode {
                        ScoringMode::ExpectedImprovement => scorer
                            .mean_and_var(&z)
                            .map(|(mu, var)| {
                                expected_improvement(
                                    direction.signed(mu),
                                    var.max(T::zero()).sqrt(),
                                    &params,
                                )
                            }),
                        ScoringMode::PredictedValue => {
                            scorer.mean(&z).map(|mu| direction.signed(mu))
                        }
                    };
                    r.unwrap_or_else(|_| T::neg_infinity())
                };
                let ga_cfg = GaConfig { seed: iter_seed, ..cfg.ga.clone() };
                let mut pool =
                    ga_propose(&score, bounds, &ga_cfg, cfg.proposals_per_iter)?;
                if cfg.gradient_proposal.enabled {
                    pool.extend(gradient_pool(cfg, p, parameterizer, bounds, direction, &observations, iter_seed)?);
                }
                pool
            }
            FittedPredictor::Gp(gp) => {
                let score = |zv: &[T]| -> T {
                    let (mu, var) = gp.predict(zv);
                    expected_improvement(
                        direction.signed(mu),
                        var.max(T::zero()).sqrt(),
                        &params,
                    )
                };
                let ga_cfg = GaConfig { seed: iter_seed, ..cfg.ga.clone() };
                ga_propose(&score, bounds, &ga_cfg, cfg.proposals_per_iter)?
            }
        };

        // (3) Dedupe against the training set and rank.
        candidates.retain(|c| {
            !observations.iter().any(|o| o.z.distance(&c.values) < T::from_f64(1e-9))
        });
        let (retained, acq_values): (Vec<LatentVector<T>>, Vec<T>) = match &fitted {
            FittedPredictor::None => (candidates, Vec::new()),
            FittedPredictor::Surrogate(p) => {
                let scorer =
                    SurrogatePredictor { predictor: p, parameterizer, seed: iter_seed };
                rank_and_retain(&scorer, scoring_mode, direction, candidates, &params, cfg.retained_per_iter)?
            }
            FittedPredictor::Gp(gp) => rank_and_retain(
                gp,
                scoring_mode,
                direction,
                candidates,
                &params,
                cfg.retained_per_iter,
            )?,
        };

        // (4) Simulate the retained candidates and grow the dataset.
        let (mut new_obs, failures) = simulate_batch(simulator, &retained, sinusoids);
        total_failures += failures;
        let added = new_obs.len();
        observations.append(&mut new_obs);
        let (_, new_best) = best_of(&observations);
        best_r = new_best;

        let mean_acq = if acq_values.is_empty() {
            T::zero()
        } else {
            acq_values.iter().copied().sum::<T>() / T::from_usize(acq_values.len())
        };
        history.iterations.push(IterationRecord {
            iteration: it,
            sim_calls: history.sim_calls + added,
            best_r,
            mean_ei_retained: mean_acq,
            wall_ms: t_iter.elapsed().as_millis() as u64,
            retained_z: retained.iter().map(|z| z.values.clone()).collect(),
            acquisition_values: acq_values,
            failures,
        });
        history.sim_calls += added;
        history.failures = total_failures;
        if added == 0 {
            log::warn!("iteration {it}: every retained candidate failed to simulate");
        }
    }

    let (best_idx, final_best) = best_of(&observations);
    history.best_r = final_best;
    history.best_z = observations[best_idx].z.values.clone();
    Ok(history)
}

/// Gradient-descent proposals started from the current best dataset
/// points (one per retained slot).
fn gradient_pool<T: Scalar>(
    cfg: &BOConfig<T>,
    predictor: &UncertainPredictor<T>,
    parameterizer: &Parameterizer<T>,
    bounds: &[(T, T)],
    direction: Direction,
    observations: &[Observation<T>],
    seed: u64,
) -> Result<Vec<LatentVector<T>>> {
    let mut order: Vec<usize> = (0..observations.len()).collect();
    order.sort_by(|&a, &b| {
        direction
            .signed(observations[b].sample.performance)
            .partial_cmp(&direction.signed(observations[a].sample.performance))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let objective = SurrogateObjective { predictor, parameterizer, bounds, direction, seed };
    let training_z: Vec<Vec<T>> = observations.iter().map(|o| o.z.values.clone()).collect();
    order
        .iter()
        .take(cfg.retained_per_iter)
        .map(|&i| {
            let z0 = LatentVector {
                values: observations[i].z.values.clone(),
                bounds: bounds.to_vec(),
            };
            gradient_propose(
                &z0,
                &objective,
                cfg.gradient_proposal.steps,
                cfg.gradient_proposal.step_size,
                cfg.r_aux_weight,
                &training_z,
                cfg.r_aux_k,
            )
        })
        .collect()
}

fn rank_and_retain<T: Scalar>(
    predictor: &dyn LatentPredictor<T>,
    mode: ScoringMode,
    direction: Direction,
    candidates: Vec<LatentVector<T>>,
    params: &AcquisitionParams<T>,
    count: usize,
) -> Result<(Vec<LatentVector<T>>, Vec<T>)> {
    let scores = acquisition_scores(predictor, mode, direction, &candidates, params)?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal)
    });
    let keep: Vec<usize> = order.into_iter().take(count).collect();
    Ok((
        keep.iter().map(|&i| candidates[i].clone()).collect(),
        keep.iter().map(|&i| scores[i]).collect(),
    ))
}
