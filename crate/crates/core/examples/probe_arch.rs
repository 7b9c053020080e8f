// Architecture sweep: kernel init variance / depth / epochs vs Cl accuracy.
use rand_chacha::rand_core::SeedableRng;
use surfopt::geometry::LatentVector;
use surfopt::optimizer::{latin_hypercube, Simulate};
use surfopt::surrogate::{train, ModelConfig, TrainConfig};
use surfopt::tasks::airfoil_task;
use surfopt::uncertainty::{fit, predict_stats, PredictMode};

fn main() {
    for (n_panels, depth, hidden, epochs, init_sigma, batch) in [
        (48, 6, 16, 100, 1.0, 16),
        (48, 6, 16, 100, 0.005, 16),
        (48, 6, 16, 100, 0.02, 16),
        (48, 6, 16, 200, 0.005, 8),
        (48, 8, 16, 150, 0.005, 8),
        (64, 6, 16, 150, 0.005, 8),
    ] {
        let task = airfoil_task::<f64>(n_panels, 4.0f64.to_radians(), 1.0);
        let bounds = task.bounds.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let design = latin_hypercube(&bounds, 40, &mut rng);
        let data: Vec<_> = design.iter().map(|z| task.simulate(z).unwrap()).collect();
        let model = ModelConfig { depth, hidden_dim: hidden, kernels: 2, sinusoids: 4, init_sigma, strict_center_transform: false };
        let tcfg = TrainConfig { epochs, learning_rate: 0.02, batch_size: batch, seed: 0, ..Default::default() };
        let t = std::time::Instant::now();
        let (_, train_loss) = train(&data, &model, &tcfg).unwrap();
        let one = t.elapsed();
        let pred = fit(&data, PredictMode::Ensemble, 5, &model, &tcfg, task.functional).unwrap();
        let fit_time = t.elapsed();
        let probes = [
            vec![0.0, 0.5, 0.12], vec![0.03, 0.5, 0.12], vec![0.06, 0.5, 0.12],
            vec![0.09, 0.5, 0.12], vec![0.09, 0.3, 0.08], vec![0.09, 0.7, 0.25],
            vec![0.045, 0.2, 0.3], vec![0.07, 0.8, 0.07],
        ];
        let mut abs_err = 0.0;
        for p in &probes {
            let z = LatentVector::new(p.clone(), bounds.clone()).unwrap();
            let truth = task.simulate(&z).unwrap().performance;
            let (mu, _, _) = predict_stats(&pred, &z, &task.parameterizer, 0).unwrap();
            abs_err += (mu - truth).abs();
        }
        println!(
            "panels {n_panels:2} d{depth} h{hidden:2} e{epochs:3} sig {init_sigma:5} b{batch:2}: train MSE {train_loss:.2e}, |Cl err| {:.4}, 1m {one:.2?}, 5m {fit_time:.2?}",
            abs_err / probes.len() as f64
        );
    }
}
