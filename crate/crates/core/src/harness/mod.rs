//! Experiment runner: metrics × discount values on one MDP, both aggregation
//! sweeps under each metric, and value errors of every aggregate.

mod config;
mod plot;

pub use config::{BuiltinMdp, ExperimentConfig, MdpSource};
pub use plot::{emit_plot_data, EPSILON_CURVE_FILE, K_CURVE_FILE};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{aggregate_epsilon, aggregate_to_k, linf_error, AggregationResult};
use crate::matrix::SquareMatrix;
use crate::mdp::{Mdp, MdpFileError};
use crate::metrics::{compute_metric, Deadline, DistanceMatrix, Method};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("cannot load MDP: {0}")]
    Mdp(#[from] MdpFileError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Block count and value error of one aggregation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// `k` or `ε`.
    pub parameter: f64,
    pub n_blocks: Option<usize>,
    pub linf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Everything measured for one (method, c) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub method: Method,
    pub c: f64,
    /// Discount used for value iteration when scoring aggregations.
    pub gamma: f64,
    pub seconds: f64,
    pub iterations: Option<usize>,
    pub certified_bound: Option<f64>,
    pub max_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub to_k: Vec<SweepPoint>,
    pub epsilon: Vec<SweepPoint>,
}

impl MetricCell {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Entrywise ordering `fix ≤ bisim ≤ tv` at one `c`, for whichever of the
/// three metrics were computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub c: f64,
    pub fix_le_bisim: Option<bool>,
    pub bisim_le_tv: Option<bool>,
    pub fix_le_tv: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mdp: String,
    pub n_states: usize,
    pub n_actions: usize,
    pub tol: f64,
    pub vi_tol: f64,
    pub seed: u64,
    pub cells: Vec<MetricCell>,
    pub ordering: Vec<OrderingCheck>,
}

impl ExperimentReport {
    pub fn cell(&self, method: Method, c: f64) -> Option<&MetricCell> {
        self.cells.iter().find(|x| x.method == method && x.c == c)
    }

    /// Copy with every wall-clock field zeroed, for run-to-run comparison.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.cells.iter_mut().for_each(|c| c.seconds = 0.0);
        r
    }
}

fn all_le(a: &SquareMatrix, b: &SquareMatrix, slack: f64) -> bool {
    a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| *x <= y + slack)
}

fn sweep(mdp: &Mdp, gamma: f64, vi_tol: f64, parameter: f64, agg: Result<AggregationResult, impl ToString>) -> SweepPoint {
    let scored = agg.map_err(|e| e.to_string()).and_then(|r| {
        let linf = linf_error(mdp, &r.partition, gamma, vi_tol).map_err(|e| e.to_string())?;
        Ok((r.partition.n_blocks(), linf))
    });
    match scored {
        Ok((n, linf)) => SweepPoint { parameter, n_blocks: Some(n), linf: Some(linf), failure: None },
        Err(reason) => SweepPoint { parameter, n_blocks: None, linf: None, failure: Some(reason) },
    }
}

fn evaluate(cfg: &ExperimentConfig, mdp: &Mdp, method: Method, c: f64) -> (MetricCell, Option<DistanceMatrix>) {
    let gamma = cfg.gamma.unwrap_or(c);
    let run_cfg = cfg.metric_config(c);
    let started = Instant::now();
    let result = compute_metric(mdp, method, &run_cfg, Deadline::after(Duration::from_secs_f64(cfg.time_budget_secs)));
    let seconds = started.elapsed().as_secs_f64();
    let mut cell = MetricCell {
        method,
        c,
        gamma,
        seconds,
        iterations: None,
        certified_bound: None,
        max_distance: None,
        failure: None,
        to_k: Vec::new(),
        epsilon: Vec::new(),
    };
    match result {
        Err(e) => {
            cell.failure = Some(e.to_string());
            (cell, None)
        }
        Ok(d) => {
            cell.iterations = Some(d.iterations());
            cell.certified_bound = d.certified_bound();
            cell.max_distance = Some(d.matrix().sup_norm());
            cell.to_k = cfg
                .k_values
                .iter()
                .map(|&k| sweep(mdp, gamma, cfg.vi_tol, k as f64, aggregate_to_k(d.matrix(), k)))
                .collect();
            cell.epsilon = cfg
                .epsilon_values
                .iter()
                .map(|&e| sweep(mdp, gamma, cfg.vi_tol, e, aggregate_epsilon(d.matrix(), e)))
                .collect();
            (cell, Some(d))
        }
    }
}

/// Runs every configured (method, c) pair. A metric that errors or exceeds
/// the time budget is kept in the report with its failure reason.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let (name, mdp) = cfg.mdp.load()?;
    let mut cells = Vec::new();
    let mut ordering = Vec::new();
    for &c in &cfg.c_values {
        let mut fix: Option<DistanceMatrix> = None;
        let mut tv = None;
        let mut bisim = None;
        for &method in &cfg.methods {
            let (cell, d) = evaluate(cfg, &mdp, method, c);
            cells.push(cell);
            match (method, d) {
                (Method::Fix | Method::FixReopt, Some(d)) if fix.is_none() => fix = Some(d),
                (Method::Tv, Some(d)) => tv = Some(d),
                (Method::Bisim, Some(d)) => bisim = Some(d),
                _ => {}
            }
        }
        let check = |a: &Option<DistanceMatrix>, b: &Option<DistanceMatrix>, slack| {
            Some(all_le(a.as_ref()?.matrix(), b.as_ref()?.matrix(), slack))
        };
        ordering.push(OrderingCheck {
            c,
            fix_le_bisim: check(&fix, &bisim, 1e-8),
            bisim_le_tv: check(&bisim, &tv, 1e-8),
            fix_le_tv: check(&fix, &tv, 2e-8),
        });
    }
    Ok(ExperimentReport {
        mdp: name,
        n_states: mdp.n_states(),
        n_actions: mdp.n_actions(),
        tol: cfg.tol,
        vi_tol: cfg.vi_tol,
        seed: cfg.seed,
        cells,
        ordering,
    })
}

/// File name of the serialized report inside an output directory.
pub const REPORT_FILE: &str = "report.json";

/// Writes `report` as JSON into `outdir`.
pub fn write_report(report: &ExperimentReport, outdir: impl AsRef<std::path::Path>) -> Result<std::path::PathBuf, HarnessError> {
    let outdir = outdir.as_ref();
    std::fs::create_dir_all(outdir)?;
    let path = outdir.join(REPORT_FILE);
    let text = crate::numfmt::to_json_string(report).map_err(|e| HarnessError::Io(e.into()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}
