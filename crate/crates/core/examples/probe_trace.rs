// Trace a failing BO run: what gets retained and why.
use surfopt::optimizer::{bo_run, BOConfig, GaConfig, GradientProposalConfig, PredictorSpec, Simulate};
use surfopt::surrogate::{ModelConfig, TrainConfig};
use surfopt::tasks::default_airfoil_task;

fn main() {
    let task = default_airfoil_task::<f64>();
    let bounds = task.bounds.clone();
    let model = ModelConfig {
        depth: 4, hidden_dim: 16, kernels: 2, sinusoids: 4, init_sigma: 0.005,
        strict_center_transform: false,
    };
    let train = TrainConfig { epochs: 60, learning_rate: 0.02, batch_size: 16, seed: 2, ..Default::default() };
    let cfg = BOConfig {
        init_dataset_size: 40,
        iterations: 8,
        proposals_per_iter: 30,
        retained_per_iter: 10,
        ga: GaConfig { population: 48, generations: 16, ..Default::default() },
        gradient_proposal: GradientProposalConfig::default(),
        predictor: PredictorSpec::Ensemble { members: 5, model, train },
        r_aux_weight: 0.0,
        r_aux_k: 5,
        epsilon_frac: 0.01,
        seed: 2,
        target: None,
    };
    let h = bo_run(&cfg, &task.parameterizer, &bounds, task.functional, task.direction, &task).unwrap();
    for rec in &h.iterations {
        let mean_m: f64 =
            rec.retained_z.iter().map(|z| z[0]).sum::<f64>() / rec.retained_z.len().max(1) as f64;
        let max_m = rec.retained_z.iter().map(|z| z[0]).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "iter {} best {:.4} | retained mean m {:.4} max m {:.4} | mean EI {:.4} | acq {:?}",
            rec.iteration,
            rec.best_r,
            mean_m,
            max_m,
            rec.mean_ei_retained,
            rec.acquisition_values.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }
}
