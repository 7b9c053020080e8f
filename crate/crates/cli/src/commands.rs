//! Subcommand implementations.

use std::fs;
use std::path::Path;
use std::time::Instant;

use surfopt::error::Result;
use surfopt::geometry::LatentVector;
use surfopt::optimizer::{bo_run, latin_hypercube, Simulate};
use surfopt::rng::stream_rng;
use surfopt::surrogate::TrainConfig;
use surfopt::uncertainty::{fit, save_predictor, PredictMode, UncertainPredictor};

use crate::formats::{
    build_task, metrics_csv, parse_metrics, read_dataset, task_name,
    DatasetIndex, FailureRecord, RunConfig, RunManifest, TrainFileConfig,
};
use crate::svg::{line_chart, Series};
use crate::{MethodArg, TaskArg, EXIT_OK, EXIT_PARTIAL};

pub fn gen_data(task: TaskArg, n: usize, seed: u64, out: &Path) -> Result<i32> {
    let setup = build_task(task)?;
    fs::create_dir_all(out)?;
    let mut rng = stream_rng(seed, 0x1A5);
    let design = latin_hypercube(&setup.bounds, n, &mut rng);
    let results: Vec<_> = {
        use rayon::prelude::*;
        design.par_iter().map(|z| setup.simulate(z)).collect()
    };
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (i, (z, r)) in design.iter().zip(results).enumerate() {
        match r {
            Ok(sample) => {
                let name = format!("sample_{i:04}.json");
                fs::write(out.join(&name), serde_json::to_vec(&sample)?)?;
                samples.push(name);
            }
            Err(e) => failures.push(FailureRecord {
                index: i,
                z: z.values.clone(),
                error: e.to_string(),
            }),
        }
    }
    let index = DatasetIndex {
        task: task_name(task).to_string(),
        setup,
        n_requested: n,
        seed,
        samples,
    };
    fs::write(out.join("index.json"), serde_json::to_vec_pretty(&index)?)?;
    fs::write(out.join("failures.json"), serde_json::to_vec_pretty(&failures)?)?;
    let ok = index.samples.len();
    log::info!("gen-data: {ok}/{n} simulations succeeded");
    Ok(if ok * 10 >= n * 9 { EXIT_OK } else { EXIT_PARTIAL })
}

pub fn train(
    dataset: &Path,
    config: Option<&Path>,
    method: MethodArg,
    seed: u64,
    out: &Path,
) -> Result<i32> {
    let (index, samples) = read_dataset(dataset)?;
    let cfg: TrainFileConfig = match config {
        Some(p) => serde_json::from_slice(&fs::read(p)?)?,
        None => TrainFileConfig::default(),
    };
    let tc = TrainConfig { seed, ..cfg.train.clone() };
    let predictor: UncertainPredictor<f64> = match method {
        MethodArg::Ens => fit(
            &samples,
            PredictMode::Ensemble,
            cfg.members,
            &cfg.model,
            &tc,
            index.setup.functional,
        )?,
        MethodArg::Mcd => fit(
            &samples,
            PredictMode::McDropout,
            cfg.passes,
            &cfg.model,
            &TrainConfig { dropout_rate: cfg.dropout_rate, ..tc },
            index.setup.functional,
        )?,
        MethodArg::Gnn => {
            let (model, final_loss) = surfopt::surrogate::train(&samples, &cfg.model, &tc)?;
            log::info!("single-surrogate final train loss {final_loss:.3e}");
            UncertainPredictor {
                mode: PredictMode::Ensemble,
                members: vec![model],
                passes: 0,
                functional: index.setup.functional,
            }
        }
        MethodArg::Krig | MethodArg::Random => {
            return Err(surfopt::Error::Config(
                "train supports the surrogate methods: ens, mcd, gnn".into(),
            ))
        }
    };
    save_predictor(&predictor, out)?;
    log::info!("trained {} on {} samples -> {}", crate::formats::method_name(method), samples.len(), out.display());
    Ok(EXIT_OK)
}

pub fn optimize(
    task: TaskArg,
    method: MethodArg,
    config: Option<&Path>,
    seed: u64,
    iterations: Option<usize>,
    budget: Option<usize>,
    out: &Path,
) -> Result<i32> {
    let setup = build_task(task)?;
    let mut run_cfg = RunConfig::load_or_default(config, task)?;
    if let Some(it) = iterations {
        run_cfg.iterations = it;
    }
    if let Some(budget) = budget {
        let left = budget.saturating_sub(run_cfg.init_dataset_size);
        run_cfg.iterations = run_cfg.iterations.min(left / run_cfg.retained_per_iter.max(1));
    }
    let bo_cfg = run_cfg.to_bo_config(method, seed);
    let t0 = Instant::now();
    let history = bo_run(
        &bo_cfg,
        &setup.parameterizer,
        &setup.bounds,
        setup.functional,
        setup.direction,
        &setup,
    )?;
    let wall_total = t0.elapsed().as_millis() as u64;

    fs::create_dir_all(out)?;
    fs::write(out.join("metrics.csv"), metrics_csv(&history))?;
    fs::write(out.join("history.json"), serde_json::to_vec_pretty(&history)?)?;
    // Retained shapes per iteration as plain mesh JSON.
    for rec in &history.iterations {
        let dir = out.join(format!("iter_{:03}", rec.iteration));
        fs::create_dir_all(&dir)?;
        for (i, zv) in rec.retained_z.iter().enumerate() {
            let z = LatentVector::clamped(zv.clone(), setup.bounds.clone());
            if let Ok(mesh) = setup.parameterizer.build(&z) {
                fs::write(dir.join(format!("shape_{i:03}.json")), serde_json::to_vec(&mesh)?)?;
            }
        }
    }
    let manifest = RunManifest {
        version: format!("surfopt {}", env!("CARGO_PKG_VERSION")),
        task: task_name(task).to_string(),
        method: crate::formats::method_name(method).to_string(),
        seed,
        config: bo_cfg,
        best_r: history.best_r,
        best_z: history.best_z.clone(),
        sim_calls: history.sim_calls,
        failures: history.failures,
        created_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        wall_ms_total: wall_total,
        per_iteration_wall_ms: history.iterations.iter().map(|r| r.wall_ms).collect(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    println!(
        "{} on {}: best {} after {} simulator calls ({} failures)",
        manifest.method, manifest.task, history.best_r, history.sim_calls, history.failures
    );
    Ok(EXIT_OK)
}

pub fn report(runs: &[std::path::PathBuf], out: Option<&Path>) -> Result<i32> {
    let mut rows = Vec::new();
    for dir in runs {
        let manifest: RunManifest =
            serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
        let metrics = parse_metrics(&fs::read_to_string(dir.join("metrics.csv"))?)?;
        let last = metrics.last().expect("parse_metrics guarantees rows");
        rows.push((
            manifest.method,
            manifest.task,
            last.best_r.clone(),
            last.sim_calls.clone(),
            dir.display().to_string(),
        ));
    }
    println!("{:<8} {:<10} {:<24} {:<10} run", "method", "task", "best_r", "sim_calls");
    for (method, task, best, calls, dir) in &rows {
        println!("{method:<8} {task:<10} {best:<24} {calls:<10} {dir}");
    }
    let mut csv = String::from("method,task,best_r,sim_calls,run\n");
    for (method, task, best, calls, dir) in &rows {
        csv.push_str(&format!("{method},{task},{best},{calls},{dir}\n"));
    }
    let csv_path = out.unwrap_or(Path::new("report.csv"));
    fs::write(csv_path, csv)?;
    Ok(EXIT_OK)
}

pub fn plot(runs: &[std::path::PathBuf], out: &Path) -> Result<i32> {
    let mut series = Vec::new();
    for dir in runs {
        let manifest: RunManifest =
            serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
        let metrics = parse_metrics(&fs::read_to_string(dir.join("metrics.csv"))?)?;
        let points = metrics
            .iter()
            .map(|row| {
                Ok((
                    row.iteration.parse::<f64>().map_err(|e| {
                        surfopt::Error::CorruptFile(format!("iteration column: {e}"))
                    })?,
                    row.best_r.parse::<f64>().map_err(|e| {
                        surfopt::Error::CorruptFile(format!("best_r column: {e}"))
                    })?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(Series { label: manifest.method, points });
    }
    let svg = line_chart("best value vs iteration", "iteration", "best_r", &series);
    fs::write(out, svg)?;
    Ok(EXIT_OK)
}
