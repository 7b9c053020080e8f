//! `surfopt`: dataset generation, surrogate training, optimization runs,
//! comparison reports and convergence plots.
//!
//! Exit codes: 0 success, 2 partial data failure, 64 usage error,
//! 70 internal error. Log level comes from `SURFOPT_LOG`
//! (error/info/debug).

mod commands;
mod formats;
mod svg;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Airfoil,
    Knuckle2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ens,
    Mcd,
    Krig,
    Gnn,
    Random,
}

#[derive(Debug, Parser)]
#[command(name = "surfopt", version, about = "Uncertainty-aware Bayesian shape optimization")]
struct Cli {
    /// Cap the worker threads used for simulations and training.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample latents, simulate them and write a dataset directory.
    GenData {
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Number of shapes to generate.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset directory.
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Train a surrogate predictor on a dataset directory.
    Train {
        /// Dataset directory produced by gen-data.
        #[arg(long)]
        dataset: std::path::PathBuf,
        /// Training config JSON (defaults are used when omitted).
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// ens, mcd or gnn.
        #[arg(long, value_enum, default_value_t = MethodArg::Ens)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output predictor directory.
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Run an optimization loop and write its artifacts.
    Optimize {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Run config JSON (defaults are used when omitted).
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the configured iteration count.
        #[arg(long)]
        iterations: Option<usize>,
        /// Cap total simulator calls (rounds iterations down).
        #[arg(long)]
        budget: Option<usize>,
        /// Output run directory.
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Compare runs: text table plus report.csv.
    Report {
        /// Run directories produced by optimize.
        #[arg(required = true)]
        runs: Vec<std::path::PathBuf>,
        /// Where to write the CSV copy (defaults to ./report.csv).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Convergence plot (best value vs iteration) as an SVG.
    Plot {
        /// Run directories produced by optimize.
        #[arg(required = true)]
        runs: Vec<std::path::PathBuf>,
        /// Output SVG path.
        #[arg(long)]
        out: std::path::PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SURFOPT_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap distinguishes help/version (success) from bad usage.
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(EXIT_OK);
                }
                _ => {
                    eprint!("{e}");
                    // Spell out the usage line even for error kinds
                    // where clap omits it.
                    use clap::CommandFactory;
                    eprintln!("\nUsage: {}", Cli::command().render_usage());
                    std::process::exit(EXIT_USAGE);
                }
            }
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("surfopt: failed to configure {jobs} worker threads: {e}");
            std::process::exit(EXIT_INTERNAL);
        }
    }
    let code = match cli.command {
        Command::GenData { task, n, seed, out } => commands::gen_data(task, n, seed, &out),
        Command::Train { dataset, config, method, seed, out } => {
            commands::train(&dataset, config.as_deref(), method, seed, &out)
        }
        Command::Optimize { task, method, config, seed, iterations, budget, out } => {
            commands::optimize(task, method, config.as_deref(), seed, iterations, budget, &out)
        }
        Command::Report { runs, out } => commands::report(&runs, out.as_deref()),
        Command::Plot { runs, out } => commands::plot(&runs, &out),
    };
    match code {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("surfopt: {e}");
            std::process::exit(EXIT_INTERNAL);
        }
    }
}
