//! Comparison methods: Kriging BO, deterministic single-surrogate
//! selection, and random search. All three reuse the engine in
//! [`crate::optimizer`], so histories and call accounting are directly
//! comparable with the uncertainty-aware runs.

use crate::error::{Error, Result};
use crate::geometry::Parameterizer;
use crate::optimizer::{bo_run, BOConfig, Direction, RunHistory, Simulate};
use crate::physics::Functional;
use crate::scalar::Scalar;

fn expect_variant<T: Scalar>(cfg: &BOConfig<T>, expected: &str) -> Result<()> {
    let got = cfg.predictor.method_name();
    if got != expected {
        return Err(Error::Config(format!(
            "config selects predictor '{got}', this runner requires '{expected}'"
        )));
    }
    Ok(())
}

/// Kriging baseline: a GP response surface over the latent directly; the
/// same GA maximizes its Expected Improvement.
pub fn kriging_bo_run<T: Scalar>(
    cfg: &BOConfig<T>,
    parameterizer: &Parameterizer<T>,
    bounds: &[(T, T)],
    functional: Functional<T>,
    direction: Direction,
    simulator: &dyn Simulate<T>,
) -> Result<RunHistory<T>> {
    expect_variant(cfg, "krig")?;
    bo_run(cfg, parameterizer, bounds, functional, direction, simulator)
}

/// Deterministic-surrogate baseline: one network, candidates ranked by
/// predicted performance alone (no variance is ever requested).
pub fn deterministic_gnn_run<T: Scalar>(
    cfg: &BOConfig<T>,
    parameterizer: &Parameterizer<T>,
    bounds: &[(T, T)],
    functional: Functional<T>,
    direction: Direction,
    simulator: &dyn Simulate<T>,
) -> Result<RunHistory<T>> {
    expect_variant(cfg, "gnn")?;
    bo_run(cfg, parameterizer, bounds, functional, direction, simulator)
}

/// Control baseline: uniform in-bounds sampling, `retained_per_iter`
/// simulations per iteration.
pub fn random_search_run<T: Scalar>(
    cfg: &BOConfig<T>,
    parameterizer: &Parameterizer<T>,
    bounds: &[(T, T)],
    functional: Functional<T>,
    direction: Direction,
    simulator: &dyn Simulate<T>,
) -> Result<RunHistory<T>> {
    expect_variant(cfg, "random")?;
    bo_run(cfg, parameterizer, bounds, functional, direction, simulator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_features, LatentVector, Mesh};
    use crate::optimizer::{GaConfig, GradientProposalConfig, PredictorSpec};
    use crate::physics::{FieldSample, TaskKind};
    use crate::rng::stream_rng;
    use rand::Rng;

    fn quadratic_sim(z: &LatentVector<f64>) -> Result<FieldSample<f64>> {
        let v = (z.values[0] - 0.62) * (z.values[0] - 0.62);
        let mut mesh = Mesh::new(vec![[z.values[0], 0.0, 0.0]], vec![]);
        build_features(&mut mesh, 0)?;
        Ok(FieldSample { mesh, field: vec![v], performance: v, task: TaskKind::MaxStress })
    }

    fn krig_cfg(seed: u64, iterations: usize) -> BOConfig<f64> {
        BOConfig {
            init_dataset_size: 6,
            iterations,
            proposals_per_iter: 12,
            retained_per_iter: 3,
            ga: GaConfig { population: 32, generations: 20, ..Default::default() },
            gradient_proposal: GradientProposalConfig::default(),
            predictor: PredictorSpec::Kriging { noise_var: 1e-8 },
            r_aux_weight: 0.0,
            r_aux_k: 5,
            epsilon_frac: 0.01,
            seed,
            target: None,
        }
    }

    #[test]
    fn kriging_finds_quadratic_optimum_within_budget() {
        // <= 30 simulator calls, optimum within 1e-2.
        let cfg = krig_cfg(5, 8);
        let p = Parameterizer::Naca4 { n_panels: 32 };
        let h = kriging_bo_run(
            &cfg,
            &p,
            &[(0.0, 1.0)],
            Functional::MaxStress,
            Direction::Minimize,
            &quadratic_sim,
        )
        .unwrap();
        h.validate(Direction::Minimize).unwrap();
        assert!(h.sim_calls <= 30, "used {} calls", h.sim_calls);
        assert!((h.best_z[0] - 0.62).abs() < 1e-2, "best z {}", h.best_z[0]);
    }

    #[test]
    fn kriging_is_seed_deterministic() {
        let cfg = krig_cfg(9, 3);
        let p = Parameterizer::Naca4 { n_panels: 32 };
        let run = || {
            kriging_bo_run(
                &cfg,
                &p,
                &[(0.0, 1.0)],
                Functional::MaxStress,
                Direction::Minimize,
                &quadratic_sim,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.best_z, b.best_z);
        assert_eq!(a.best_r, b.best_r);
        assert_eq!(
            a.iterations.iter().map(|r| r.sim_calls).collect::<Vec<_>>(),
            b.iterations.iter().map(|r| r.sim_calls).collect::<Vec<_>>()
        );
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let cfg = krig_cfg(1, 1);
        let p = Parameterizer::Naca4 { n_panels: 32 };
        assert!(matches!(
            random_search_run(
                &cfg,
                &p,
                &[(0.0, 1.0)],
                Functional::MaxStress,
                Direction::Minimize,
                &quadratic_sim,
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn random_search_best_matches_order_statistics() {
        // Linear objective on [0, 1): the expected maximum of n uniform
        // samples is n/(n+1). Average over 200 seeds and compare within
        // 4 standard errors (order-statistics oracle: var of the max is
        // n/((n+1)^2 (n+2))).
        let n_samples = 10usize;
        let seeds = 200u64;
        let mut sum = 0.0f64;
        for seed in 0..seeds {
            let mut rng = stream_rng(seed, 77);
            let best = (0..n_samples)
                .map(|_| rng.gen::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            sum += best;
        }
        let avg = sum / seeds as f64;
        let n = n_samples as f64;
        let expected = n / (n + 1.0);
        let var_max = n / ((n + 1.0) * (n + 1.0) * (n + 2.0));
        let se = (var_max / seeds as f64).sqrt();
        assert!(
            (avg - expected).abs() < 4.0 * se,
            "avg {avg} vs expected {expected} (se {se})"
        );
    }
}
