// Feasibility probe for the knuckle stress minimization task.
use std::time::Instant;

use surfopt::optimizer::{bo_run, BOConfig, GaConfig, GradientProposalConfig, PredictorSpec};
use surfopt::surrogate::{ModelConfig, TrainConfig};
use surfopt::tasks::knuckle2d_task;

fn main() {
    let task = knuckle2d_task::<f64>().unwrap();
    let bounds = task.bounds.clone();
    let model = ModelConfig {
        depth: 4, hidden_dim: 16, kernels: 2, sinusoids: 4, init_sigma: 0.02,
        strict_center_transform: false,
    };
    let total = Instant::now();
    for seed in 1u64..=3 {
        let train = TrainConfig { epochs: 30, learning_rate: 0.02, batch_size: 16, seed, ..Default::default() };
        let cfg = BOConfig {
            init_dataset_size: 200,
            iterations: 10,
            proposals_per_iter: 30,
            retained_per_iter: 10,
            ga: GaConfig { population: 48, generations: 12, ..Default::default() },
            gradient_proposal: GradientProposalConfig::default(),
            predictor: PredictorSpec::Ensemble { members: 5, model: model.clone(), train },
            r_aux_weight: 0.0,
            r_aux_k: 5,
            epsilon_frac: 0.01,
            seed,
            target: None,
        };
        let t = Instant::now();
        let h = bo_run(&cfg, &task.parameterizer, &bounds, task.functional, task.direction, &task).unwrap();
        let init_best = h.iterations[0].best_r;
        println!(
            "seed {seed}: init best {:.4e} -> final {:.4e} ({:.2}% improvement), calls {}, failures {}, in {:.1?}",
            init_best,
            h.best_r,
            100.0 * (init_best - h.best_r) / init_best,
            h.sim_calls,
            h.failures,
            t.elapsed()
        );
    }
    println!("total {:?}", total.elapsed());
}
