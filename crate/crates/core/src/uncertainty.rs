//! Predictors with uncertainty: deep ensembles and MC-dropout.
//!
//! Both turn one or many surrogates into `(mu(z), sigma^2(z))` over the
//! task performance: build the mesh `P(z)`, run the member networks (or
//! stochastic passes) on it, reduce each predicted field to a
//! performance estimate, and take the sample mean and unbiased variance
//! of the estimates.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_features, LatentVector, Parameterizer};
use crate::physics::{FieldSample, Functional};
use crate::rng::stream_rng;
use crate::scalar::Scalar;
use crate::surrogate::{
    load_model, save_model, train, GraphCache, ModelConfig, SurrogateModel, TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictMode {
    Ensemble,
    McDropout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertainPredictor<T> {
    pub mode: PredictMode,
    /// N trained members (ensemble) or exactly one (MC-dropout).
    pub members: Vec<SurrogateModel<T>>,
    /// Stochastic passes for MC-dropout.
    pub passes: usize,
    pub functional: Functional<T>,
}

/// Trains an uncertainty-aware predictor on the dataset.
///
/// Ensemble mode trains `n` members on the full dataset (no bagging),
/// differing only in their initialization seed (`base seed + index`);
/// MC-dropout trains a single model with dropout live.
pub fn fit<T: Scalar>(
    dataset: &[FieldSample<T>],
    mode: PredictMode,
    n_members_or_passes: usize,
    model_cfg: &ModelConfig,
    base_cfg: &TrainConfig<T>,
    functional: Functional<T>,
) -> Result<UncertainPredictor<T>> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData("empty training dataset".into()));
    }
    match mode {
        PredictMode::Ensemble => {
            if n_members_or_passes < 2 {
                return Err(Error::Config(
                    "ensemble needs at least 2 members (variance undefined for 1)".into(),
                ));
            }
            if base_cfg.dropout_rate > T::zero() {
                return Err(Error::Config("ensemble members train without dropout".into()));
            }
            let members: Vec<SurrogateModel<T>> = (0..n_members_or_passes)
                .into_par_iter()
                .map(|i| {
                    let cfg = TrainConfig {
                        seed: base_cfg.seed.wrapping_add(i as u64),
                        ..base_cfg.clone()
                    };
                    train(dataset, model_cfg, &cfg)
                        .map(|(model, _)| model)
                        .map_err(|e| Error::Config(format!("member {i}: {e}")))
                })
                .collect::<Result<_>>()?;
            Ok(UncertainPredictor { mode, members, passes: 0, functional })
        }
        PredictMode::McDropout => {
            if n_members_or_passes < 2 {
                return Err(Error::Config("MC-dropout needs at least 2 passes".into()));
            }
            if base_cfg.dropout_rate <= T::zero() {
                return Err(Error::Config(
                    "MC-dropout requires a positive dropout rate".into(),
                ));
            }
            let (model, _) = train(dataset, model_cfg, base_cfg)?;
            Ok(UncertainPredictor {
                mode,
                members: vec![model],
                passes: n_members_or_passes,
                functional,
            })
        }
    }
}

impl<T: Scalar> UncertainPredictor<T> {
    pub fn sinusoids(&self) -> usize {
        self.members[0].sinusoids
    }

    /// Per-member (or per-pass) performance estimates and fields at `z`,
    /// in member/pass order.
    pub fn member_estimates(
        &self,
        z: &LatentVector<T>,
        parameterizer: &Parameterizer<T>,
        seed: u64,
    ) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        let mut mesh = parameterizer.build(z)?;
        build_features(&mut mesh, self.sinusoids())?;
        let graph = GraphCache::build(&mesh)?;
        let feats = self.members[0].features_of(&mesh)?;
        let fields: Vec<Vec<T>> = match self.mode {
            PredictMode::Ensemble => self
                .members
                .par_iter()
                .map(|m| {
                    let mut rng = stream_rng(0, 0);
                    m.forward(&graph, &feats, false, &mut rng)
                })
                .collect::<Result<_>>()?,
            PredictMode::McDropout => (0..self.passes)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream_rng(seed, t as u64);
                    self.members[0].forward(&graph, &feats, true, &mut rng)
                })
                .collect::<Result<_>>()?,
        };
        let estimates = fields
            .iter()
            .map(|f| self.functional.eval(&mesh, f))
            .collect::<Result<Vec<_>>>()?;
        Ok((estimates, fields))
    }
}

/// Mean, unbiased variance, and mean field of the member estimates at
/// `z`. `seed` drives the dropout streams of MC-dropout inference and is
/// ignored by ensembles.
pub fn predict_stats<T: Scalar>(
    predictor: &UncertainPredictor<T>,
    z: &LatentVector<T>,
    parameterizer: &Parameterizer<T>,
    seed: u64,
) -> Result<(T, T, Vec<T>)> {
    let (estimates, fields) = predictor.member_estimates(z, parameterizer, seed)?;
    let (mu, var) = mean_and_unbiased_variance(&estimates);
    let nodes = fields[0].len();
    let inv_n = T::one() / T::from_usize(fields.len());
    let mut field_mean = vec![T::zero(); nodes];
    for f in &fields {
        for (acc, &v) in field_mean.iter_mut().zip(f) {
            *acc += v * inv_n;
        }
    }
    Ok((mu, var, field_mean))
}

/// Sample mean and the (N-1)-normalized variance, reduced in member
/// order.
pub fn mean_and_unbiased_variance<T: Scalar>(estimates: &[T]) -> (T, T) {
    let n = estimates.len();
    let mu = estimates.iter().copied().sum::<T>() / T::from_usize(n);
    if n < 2 {
        return (mu, T::zero());
    }
    let ss = estimates.iter().map(|&g| (g - mu) * (g - mu)).sum::<T>();
    (mu, ss / T::from_usize(n - 1))
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictorManifest<T> {
    mode: PredictMode,
    members: usize,
    passes: usize,
    functional: Functional<T>,
}

/// Writes `manifest.json` plus one weight file per member into `dir`.
pub fn save_predictor<T: Scalar + Serialize>(
    predictor: &UncertainPredictor<T>,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = PredictorManifest {
        mode: predictor.mode,
        members: predictor.members.len(),
        passes: predictor.passes,
        functional: predictor.functional,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    for (i, m) in predictor.members.iter().enumerate() {
        save_model(m, &dir.join(format!("member_{i:03}.sopt")))?;
    }
    Ok(())
}

pub fn load_predictor<T: Scalar + serde::de::DeserializeOwned>(
    dir: &Path,
) -> Result<UncertainPredictor<T>> {
    let manifest: PredictorManifest<T> =
        serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    let members = (0..manifest.members)
        .map(|i| load_model(&dir.join(format!("member_{i:03}.sopt"))))
        .collect::<Result<_>>()?;
    Ok(UncertainPredictor {
        mode: manifest.mode,
        members,
        passes: manifest.passes,
        functional: manifest.functional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::naca::{naca_bounds, naca_contour};
    use crate::physics::panel_solve;

    fn airfoil_dataset(n: usize) -> Vec<FieldSample<f64>> {
        (0..n)
            .map(|i| {
                let m = 0.01 + 0.01 * i as f64;
                let z = LatentVector::new(vec![m, 0.4, 0.12], naca_bounds()).unwrap();
                let mesh = naca_contour(&z, 32).unwrap();
                panel_solve(&mesh, 0.07, 1.0).unwrap()
            })
            .collect()
    }

    fn quick_cfgs(dropout: f64) -> (ModelConfig, TrainConfig<f64>) {
        (
            ModelConfig { depth: 2, hidden_dim: 8, kernels: 2, sinusoids: 2, ..Default::default() },
            TrainConfig { epochs: 10, dropout_rate: dropout, seed: 3, ..Default::default() },
        )
    }

    #[test]
    fn hand_computed_stats() {
        let (mu, var) = mean_and_unbiased_variance(&[1.0, 2.0, 3.0]);
        assert_eq!(mu, 2.0);
        assert_eq!(var, 1.0);
        // Two-pass oracle.
        let est = [0.3, -0.7, 1.9, 0.2];
        let (m2, v2) = mean_and_unbiased_variance(&est);
        let mean: f64 = est.iter().sum::<f64>() / 4.0;
        let var2: f64 = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((m2 - mean).abs() < 1e-15);
        assert!((v2 - var2).abs() < 1e-15);
    }

    #[test]
    fn single_member_ensemble_is_rejected() {
        let data = airfoil_dataset(2);
        let (mcfg, tcfg) = quick_cfgs(0.0);
        let err = fit(&data, PredictMode::Ensemble, 1, &mcfg, &tcfg, Functional::MaxStress)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn mcd_with_zero_rate_is_rejected() {
        let data = airfoil_dataset(2);
        let (mcfg, tcfg) = quick_cfgs(0.0);
        let err = fit(&data, PredictMode::McDropout, 8, &mcfg, &tcfg, Functional::MaxStress)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn identical_seeds_give_zero_variance() {
        let data = airfoil_dataset(3);
        let (mcfg, tcfg) = quick_cfgs(0.0);
        let functional = Functional::AirfoilLift { alpha: 0.07 };
        let fitted =
            fit(&data, PredictMode::Ensemble, 3, &mcfg, &tcfg, functional).unwrap();
        // Force every member identical.
        let mut rigged = fitted.clone();
        rigged.members = vec![fitted.members[0].clone(); 3];
        let p = Parameterizer::Naca4 { n_panels: 32 };
        let z = LatentVector::new(vec![0.02, 0.4, 0.12], naca_bounds()).unwrap();
        let (_, var, _) = predict_stats(&rigged, &z, &p, 0).unwrap();
        assert_eq!(var, 0.0);
    }

    #[test]
    fn fit_is_deterministic_and_members_differ() {
        let data = airfoil_dataset(3);
        let (mcfg, tcfg) = quick_cfgs(0.0);
        let functional = Functional::AirfoilLift { alpha: 0.07 };
        let a = fit(&data, PredictMode::Ensemble, 2, &mcfg, &tcfg, functional).unwrap();
        let b = fit(&data, PredictMode::Ensemble, 2, &mcfg, &tcfg, functional).unwrap();
        assert_eq!(a.members, b.members);
        assert_ne!(a.members[0], a.members[1], "different seeds must differ");
    }

    #[test]
    fn ensemble_mu_is_mean_of_member_predictions() {
        let data = airfoil_dataset(3);
        let (mcfg, tcfg) = quick_cfgs(0.0);
        let functional = Functional::AirfoilLift { alpha: 0.07 };
        let fitted = fit(&data, PredictMode::Ensemble, 3, &mcfg, &tcfg, functional).unwrap();
        let p = Parameterizer::Naca4 { n_panels: 32 };
        let z = LatentVector::new(vec![0.03, 0.5, 0.14], naca_bounds()).unwrap();
        let (mu, var, _) = predict_stats(&fitted, &z, &p, 0).unwrap();
        let (estimates, _) = fitted.member_estimates(&z, &p, 0).unwrap();
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        approx::assert_relative_eq!(mu, mean, epsilon = 1e-14);
        assert!(var >= 0.0);
        // Permutation invariance of the reduction.
        let mut rev = fitted.clone();
        rev.members.reverse();
        let (mu_r, var_r, _) = predict_stats(&rev, &z, &p, 0).unwrap();
        approx::assert_relative_eq!(mu, mu_r, epsilon = 1e-12);
        approx::assert_relative_eq!(var, var_r, epsilon = 1e-12);
    }

    #[test]
    fn mcd_passes_are_stochastic_but_seed_stable() {
        let data = airfoil_dataset(3);
        let (mcfg, tcfg) = quick_cfgs(0.15);
        let functional = Functional::AirfoilLift { alpha: 0.07 };
        let fitted = fit(&data, PredictMode::McDropout, 6, &mcfg, &tcfg, functional).unwrap();
        let p = Parameterizer::Naca4 { n_panels: 32 };
        let z = LatentVector::new(vec![0.02, 0.4, 0.12], naca_bounds()).unwrap();
        let (mu1, var1, _) = predict_stats(&fitted, &z, &p, 5).unwrap();
        let (mu2, var2, _) = predict_stats(&fitted, &z, &p, 5).unwrap();
        assert_eq!((mu1, var1), (mu2, var2));
        let (_, var3, _) = predict_stats(&fitted, &z, &p, 6).unwrap();
        assert!(var1 > 0.0);
        assert_ne!(var1, var3, "different dropout streams should differ");
    }

    #[test]
    fn predictor_directory_round_trip() {
        let data = airfoil_dataset(2);
        let (mcfg, tcfg) = quick_cfgs(0.0);
        let functional = Functional::AirfoilLift { alpha: 0.07 };
        let fitted = fit(&data, PredictMode::Ensemble, 2, &mcfg, &tcfg, functional).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_predictor(&fitted, dir.path()).unwrap();
        let loaded: UncertainPredictor<f64> = load_predictor(dir.path()).unwrap();
        assert_eq!(fitted.members, loaded.members);
        assert_eq!(fitted.passes, loaded.passes);
        assert_eq!(fitted.mode, loaded.mode);
    }
}
