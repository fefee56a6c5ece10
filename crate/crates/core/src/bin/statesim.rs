use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use statesim::aggregate::{aggregate_epsilon, aggregate_to_k, linf_error, AggregateError};
use statesim::bisim::Partition;
use statesim::harness::{emit_plot_data, run_experiment, write_report, ExperimentConfig, HarnessError};
use statesim::mdp::{load_mdp, make_coffee_robot, make_gridworld, save_mdp};
use statesim::metrics::{compute_metric, read_distance_csv, write_distance, Backend, Deadline, Method, MetricError, MetricRunConfig};
use statesim::numfmt;

#[derive(Parser)]
#[command(name = "statesim", version, about = "Bisimulation metrics and state aggregation for finite MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Benchmark {
    Gridworld,
    Coffee,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark MDP as JSON.
    Gen {
        benchmark: Benchmark,
        /// Grid side length (gridworld only).
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a distance matrix; writes PREFIX.csv and PREFIX.json.
    Compute(ComputeArgs),
    /// Aggregate states under a distance matrix.
    Aggregate {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
        k: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// L∞ value error of a partition.
    Eval {
        #[arg(long)]
        mdp: PathBuf,
        /// JSON with a "blocks" field (a partition or an aggregation result).
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment sweep from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long)]
    method: Method,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 600.0)]
    budget: f64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Compute(String),
}

impl Failure {
    fn config(e: impl ToString) -> Self {
        Failure::Config(e.to_string())
    }
    fn compute(e: impl ToString) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Config(_) => Failure::config(e),
            _ => Failure::compute(e),
        }
    }
}

impl From<AggregateError> for Failure {
    fn from(e: AggregateError) -> Self {
        match e {
            AggregateError::KOutOfRange { .. } | AggregateError::Epsilon(_) | AggregateError::SizeMismatch { .. } => Failure::config(e),
            _ => Failure::compute(e),
        }
    }
}

#[derive(Deserialize)]
struct BlocksFile {
    blocks: Vec<Vec<usize>>,
}

fn write_text(path: &Path, text: String) -> Result<(), Failure> {
    fs::write(path, text + "\n").map_err(|e| Failure::compute(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    numfmt::to_json_string(value).map_err(Failure::compute)
}

fn compute(a: ComputeArgs) -> Result<(), Failure> {
    let mdp = load_mdp(&a.mdp).map_err(Failure::config)?;
    if !(a.budget >= 0.0 && a.budget.is_finite()) {
        return Err(Failure::config("budget must be finite and nonnegative"));
    }
    let cfg = MetricRunConfig { c: a.c, tol: a.tol, backend: Backend::Cold, samples: a.samples, runs: a.runs, seed: a.seed };
    cfg.validate()?;
    let d = compute_metric(&mdp, a.method, &cfg, Deadline::after(std::time::Duration::from_secs_f64(a.budget)))?;
    let (csv, json) = write_distance(&d, &a.out).map_err(Failure::compute)?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { benchmark, n, out } => {
            let mdp = match benchmark {
                Benchmark::Gridworld => make_gridworld(n).map_err(Failure::config)?,
                Benchmark::Coffee => make_coffee_robot(),
            };
            save_mdp(&mdp, &out).map_err(Failure::compute)
        }
        Command::Compute(a) => compute(a),
        Command::Aggregate { dist, k, epsilon, out } => {
            let d = read_distance_csv(&dist).map_err(Failure::config)?;
            let result = match (k, epsilon) {
                (Some(k), _) => aggregate_to_k(&d, k)?,
                (None, Some(e)) => aggregate_epsilon(&d, e)?,
                (None, None) => unreachable!("clap requires --k or --epsilon"),
            };
            write_text(&out, to_json(&result)?)
        }
        Command::Eval { mdp, partition, gamma, tol, out } => {
            let mdp = load_mdp(&mdp).map_err(Failure::config)?;
            let text = fs::read_to_string(&partition).map_err(|e| Failure::config(format!("{}: {e}", partition.display())))?;
            let blocks: BlocksFile = serde_json::from_str(&text).map_err(Failure::config)?;
            let part = Partition::from_blocks(blocks.blocks, mdp.n_states()).map_err(Failure::config)?;
            if !(gamma > 0.0 && gamma < 1.0) || !(tol > 0.0 && tol.is_finite()) {
                return Err(Failure::config(format!("need 0 < gamma < 1 and tol > 0 (got {gamma}, {tol})")));
            }
            let linf = linf_error(&mdp, &part, gamma, tol)?;
            let report = serde_json::json!({
                "gamma": gamma,
                "tol": tol,
                "n_states": mdp.n_states(),
                "n_blocks": part.n_blocks(),
                "linf": linf,
            });
            write_text(&out, to_json(&report)?)
        }
        Command::Experiment { config, out } => {
            let text = fs::read_to_string(&config).map_err(|e| Failure::config(format!("{}: {e}", config.display())))?;
            let cfg = ExperimentConfig::from_json(&text).map_err(Failure::config)?;
            let report = run_experiment(&cfg).map_err(|e| match e {
                HarnessError::Config(_) | HarnessError::Mdp(_) => Failure::config(e),
                _ => Failure::compute(e),
            })?;
            write_report(&report, &out).map_err(Failure::compute)?;
            emit_plot_data(&report, &out).map_err(Failure::compute)?;
            let failed = report.cells.iter().filter(|c| c.failed()).count();
            if failed > 0 {
                eprintln!("{failed} of {} metric cells failed; see report", report.cells.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
