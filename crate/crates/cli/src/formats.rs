//! On-disk layouts shared by the subcommands: dataset directories, run
//! configs, run manifests and metrics.csv.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use surfopt::error::{Error, Result};
use surfopt::optimizer::{
    BOConfig, GaConfig, GradientProposalConfig, PredictorSpec, RunHistory,
};
use surfopt::physics::FieldSample;
use surfopt::surrogate::{ModelConfig, TrainConfig};
use surfopt::tasks::TaskSetup;

use crate::{MethodArg, TaskArg};

pub fn task_name(task: TaskArg) -> &'static str {
    match task {
        TaskArg::Airfoil => "airfoil",
        TaskArg::Knuckle2d => "knuckle2d",
    }
}

pub fn method_name(method: MethodArg) -> &'static str {
    match method {
        MethodArg::Ens => "ens",
        MethodArg::Mcd => "mcd",
        MethodArg::Krig => "krig",
        MethodArg::Gnn => "gnn",
        MethodArg::Random => "random",
    }
}

pub fn build_task(task: TaskArg) -> Result<TaskSetup<f64>> {
    match task {
        TaskArg::Airfoil => Ok(surfopt::tasks::default_airfoil_task()),
        TaskArg::Knuckle2d => surfopt::tasks::knuckle2d_task(),
    }
}

/// `index.json` of a dataset directory. The full task setup is embedded
/// so training and reporting need nothing but the directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub task: String,
    pub setup: TaskSetup<f64>,
    pub n_requested: usize,
    pub seed: u64,
    pub samples: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FailureRecord {
    pub index: usize,
    pub z: Vec<f64>,
    pub error: String,
}

pub fn read_dataset(dir: &Path) -> Result<(DatasetIndex, Vec<FieldSample<f64>>)> {
    let index: DatasetIndex = serde_json::from_slice(&fs::read(dir.join("index.json"))?)?;
    let samples = index
        .samples
        .iter()
        .map(|name| Ok(serde_json::from_slice(&fs::read(dir.join(name))?)?))
        .collect::<Result<Vec<_>>>()?;
    Ok((index, samples))
}

/// Optimization run configuration; every field has a default so config
/// files only need to override what they change.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub init_dataset_size: usize,
    pub iterations: usize,
    pub proposals_per_iter: usize,
    pub retained_per_iter: usize,
    pub ga: GaConfig<f64>,
    pub gradient_proposal: GradientProposalConfig<f64>,
    pub r_aux_weight: f64,
    pub r_aux_k: usize,
    pub epsilon_frac: f64,
    pub target: Option<f64>,
    /// Ensemble size.
    pub members: usize,
    /// MC-dropout forward passes.
    pub passes: usize,
    /// MC-dropout rate (applied to the training config for mcd runs).
    pub dropout_rate: f64,
    /// GP observation noise for the Kriging baseline.
    pub noise_var: f64,
    pub model: ModelConfig,
    pub train: TrainConfig<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            init_dataset_size: 40,
            iterations: 8,
            proposals_per_iter: 30,
            retained_per_iter: 10,
            ga: GaConfig { population: 48, generations: 16, ..Default::default() },
            gradient_proposal: GradientProposalConfig::default(),
            r_aux_weight: 0.0,
            r_aux_k: 5,
            epsilon_frac: 0.01,
            target: None,
            members: 5,
            passes: 20,
            dropout_rate: 0.1,
            noise_var: 1e-8,
            model: ModelConfig {
                depth: 4,
                hidden_dim: 16,
                kernels: 2,
                sinusoids: 4,
                init_sigma: 0.005,
                strict_center_transform: false,
            },
            train: TrainConfig {
                epochs: 60,
                learning_rate: 0.02,
                batch_size: 16,
                ..Default::default()
            },
        }
    }
}

impl RunConfig {
    /// Task-tuned defaults (edge-length scales and budgets differ).
    pub fn defaults_for(task: TaskArg) -> Self {
        match task {
            TaskArg::Airfoil => Self::default(),
            TaskArg::Knuckle2d => Self {
                init_dataset_size: 200,
                iterations: 10,
                ga: GaConfig { population: 48, generations: 12, ..Default::default() },
                model: ModelConfig {
                    depth: 4,
                    hidden_dim: 16,
                    kernels: 2,
                    sinusoids: 4,
                    init_sigma: 0.02,
                    strict_center_transform: false,
                },
                train: TrainConfig {
                    epochs: 30,
                    learning_rate: 0.02,
                    batch_size: 16,
                    ..Default::default()
                },
                ..Self::default()
            },
        }
    }

    pub fn load_or_default(path: Option<&Path>, task: TaskArg) -> Result<Self> {
        match path {
            Some(p) => {
                let cfg: Self = serde_json::from_slice(&fs::read(p)?)?;
                // Files may omit the model/train blocks entirely; those
                // already defaulted via serde. Nothing task-specific to
                // patch up afterwards.
                cfg.validate()?;
                Ok(cfg)
            }
            None => Ok(Self::defaults_for(task)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.members < 2 {
            return Err(Error::Config("members must be >= 2 for ensembles".into()));
        }
        if self.passes < 2 {
            return Err(Error::Config("passes must be >= 2 for MC-dropout".into()));
        }
        Ok(())
    }

    pub fn to_bo_config(&self, method: MethodArg, seed: u64) -> BOConfig<f64> {
        let train = TrainConfig { seed, ..self.train.clone() };
        let predictor = match method {
            MethodArg::Ens => PredictorSpec::Ensemble {
                members: self.members,
                model: self.model.clone(),
                train,
            },
            MethodArg::Mcd => PredictorSpec::McDropout {
                passes: self.passes,
                model: self.model.clone(),
                train: TrainConfig { dropout_rate: self.dropout_rate, ..train },
            },
            MethodArg::Gnn => {
                PredictorSpec::SingleGnn { model: self.model.clone(), train }
            }
            MethodArg::Krig => PredictorSpec::Kriging { noise_var: self.noise_var },
            MethodArg::Random => PredictorSpec::RandomSearch,
        };
        BOConfig {
            init_dataset_size: self.init_dataset_size,
            iterations: self.iterations,
            proposals_per_iter: self.proposals_per_iter,
            retained_per_iter: self.retained_per_iter,
            ga: self.ga.clone(),
            gradient_proposal: self.gradient_proposal.clone(),
            predictor,
            r_aux_weight: self.r_aux_weight,
            r_aux_k: self.r_aux_k,
            epsilon_frac: self.epsilon_frac,
            seed,
            target: self.target,
        }
    }
}

/// `manifest.json` of a run directory. Wall-clock timing lives here, and
/// only here, so every other artifact is byte-reproducible.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub task: String,
    pub method: String,
    pub seed: u64,
    pub config: BOConfig<f64>,
    pub best_r: f64,
    pub best_z: Vec<f64>,
    pub sim_calls: usize,
    pub failures: usize,
    pub created_unix_ms: u128,
    pub wall_ms_total: u64,
    pub per_iteration_wall_ms: Vec<u64>,
}

/// Serializes the metrics table. The wall_ms column is fixed at 0 to
/// keep the file byte-identical across repeated seeded runs; measured
/// timings are recorded in the manifest instead.
pub fn metrics_csv(history: &RunHistory<f64>) -> String {
    let mut out = String::from("iteration,sim_calls,best_r,mean_EI_retained,wall_ms\n");
    for rec in &history.iterations {
        out.push_str(&format!(
            "{},{},{},{},0\n",
            rec.iteration, rec.sim_calls, rec.best_r, rec.mean_ei_retained
        ));
    }
    out
}

/// One parsed metrics row; numeric strings are kept verbatim so reports
/// can round-trip values exactly.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub iteration: String,
    pub sim_calls: String,
    pub best_r: String,
}

pub fn parse_metrics(content: &str) -> Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if i == 0 {
            if line != "iteration,sim_calls,best_r,mean_EI_retained,wall_ms" {
                return Err(Error::CorruptFile(format!("bad metrics header: {line}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::CorruptFile(format!("bad metrics row: {line}")));
        }
        rows.push(MetricsRow {
            iteration: fields[0].to_string(),
            sim_calls: fields[1].to_string(),
            best_r: fields[2].to_string(),
        });
    }
    if rows.is_empty() {
        return Err(Error::CorruptFile("metrics.csv has no rows".into()));
    }
    Ok(rows)
}

/// Training config file for `surfopt train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainFileConfig {
    pub members: usize,
    pub passes: usize,
    pub dropout_rate: f64,
    pub model: ModelConfig,
    pub train: TrainConfig<f64>,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        let rc = RunConfig::default();
        Self {
            members: rc.members,
            passes: rc.passes,
            dropout_rate: rc.dropout_rate,
            model: rc.model,
            train: rc.train,
        }
    }
}
