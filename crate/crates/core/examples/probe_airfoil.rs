// Feasibility probe for acceptance: ENS vs random vs GNN over 5 seeds.
use std::time::Instant;

use rayon::prelude::*;
use surfopt::geometry::LatentVector;
use surfopt::optimizer::{bo_run, BOConfig, GaConfig, GradientProposalConfig, PredictorSpec, Simulate};
use surfopt::surrogate::{ModelConfig, TrainConfig};
use surfopt::tasks::default_airfoil_task;

fn main() {
    let task = default_airfoil_task::<f64>();
    let bounds = task.bounds.clone();

    let t0 = Instant::now();
    let steps = 21usize;
    let best_grid = (0..steps.pow(3))
        .into_par_iter()
        .filter_map(|idx| {
            let (i, j, k) = (idx / (steps * steps), (idx / steps) % steps, idx % steps);
            let f = |b: (f64, f64), t: usize| b.0 + (b.1 - b.0) * t as f64 / (steps - 1) as f64;
            let z = LatentVector::new(
                vec![f(bounds[0], i), f(bounds[1], j), f(bounds[2], k)],
                bounds.clone(),
            )
            .ok()?;
            task.simulate(&z).ok().map(|s| s.performance)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    println!("grid optimum Cl = {best_grid:.5} in {:?}", t0.elapsed());

    let model = ModelConfig { depth: 4, hidden_dim: 16, kernels: 2, sinusoids: 4, init_sigma: 0.005, strict_center_transform: false };
    let base_train = TrainConfig { epochs: 60, learning_rate: 0.02, batch_size: 16, dropout_rate: 0.0, seed: 0, ..Default::default() };
    let mk_cfg = |seed: u64, predictor: PredictorSpec<f64>| BOConfig {
        init_dataset_size: 40,
        iterations: 8,
        proposals_per_iter: 30,
        retained_per_iter: 10,
        ga: GaConfig { population: 48, generations: 16, ..Default::default() },
        gradient_proposal: GradientProposalConfig::default(),
        predictor,
        r_aux_weight: 0.0,
        r_aux_k: 5,
        epsilon_frac: 0.01,
        seed,
        target: None,
    };

    let mut ens_best = Vec::new();
    let mut rnd_best = Vec::new();
    let mut ens_curves = Vec::new();
    let mut gnn_curves = Vec::new();
    let total = Instant::now();
    for seed in 1u64..=5 {
        let tr = TrainConfig { seed, ..base_train.clone() };
        let cfg = mk_cfg(seed, PredictorSpec::Ensemble { members: 5, model: clone_m(&model), train: tr.clone() });
        let t1 = Instant::now();
        let h = bo_run(&cfg, &task.parameterizer, &bounds, task.functional, task.direction, &task).unwrap();
        let ens_t = t1.elapsed();
        let gcfg = mk_cfg(seed, PredictorSpec::SingleGnn { model: clone_m(&model), train: tr });
        let hg = bo_run(&gcfg, &task.parameterizer, &bounds, task.functional, task.direction, &task).unwrap();
        let rcfg = mk_cfg(seed, PredictorSpec::RandomSearch);
        let hr = bo_run(&rcfg, &task.parameterizer, &bounds, task.functional, task.direction, &task).unwrap();
        println!(
            "seed {seed}: ENS {:.4} ({:.1}%) in {ens_t:.1?} | GNN {:.4} | RND {:.4}",
            h.best_r, 100.0 * h.best_r / best_grid, hg.best_r, hr.best_r
        );
        ens_best.push(h.best_r);
        rnd_best.push(hr.best_r);
        ens_curves.push(h.iterations.iter().map(|r| r.best_r).collect::<Vec<_>>());
        gnn_curves.push(hg.iterations.iter().map(|r| r.best_r).collect::<Vec<_>>());
    }
    let median = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let mut e = ens_best.clone();
    println!("ENS median {:.4} = {:.2}% of grid", median(&mut e), 100.0 * median(&mut ens_best.clone()) / best_grid);
    let wins = ens_best.iter().zip(&rnd_best).filter(|(a, b)| a > b).count();
    println!("ENS beats RND in {wins}/5 pairings");
    for it in 0..9 {
        let med = |curves: &Vec<Vec<f64>>| {
            let mut c: Vec<f64> = curves.iter().map(|v| v[it]).collect();
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            c[c.len() / 2]
        };
        println!("iter {it}: ENS med {:.4} GNN med {:.4}", med(&ens_curves), med(&gnn_curves));
    }
    println!("total probe time {:?}", total.elapsed());
}

fn clone_m(m: &ModelConfig) -> ModelConfig { m.clone() }
