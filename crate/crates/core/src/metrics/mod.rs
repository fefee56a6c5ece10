//! State-similarity metrics.
//!
//! Every metric here is a pseudometric `d` on states bounded by `R/(1−c)`,
//! where `R` is the largest reward gap between two states under one action.
//! The iterative methods apply
//!
//! ```text
//! F(h)(s, s') = max_a ( |r(s,a) − r(s',a)| + c · TK(h)(P(s,a), P(s',a)) )
//! ```
//!
//! from `h = 0` and stop as soon as the a-priori contraction bound
//! `cⁿ/(1−c) · ‖F(0)‖` drops below the requested tolerance.

mod fixed_point;
mod io;

pub use fixed_point::{apply_f, fixed_point_metric, sampled_metric, sampled_runs, Deadline, HintTable, KantorovichBackend};
pub use io::{read_distance_csv, read_metadata, write_distance, DistanceFileError, DistanceMetadata};

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisim::{bisimulation_partition, class_tv_slices, Partition};
use crate::matrix::SquareMatrix;
use crate::mdp::Mdp;
use crate::transport::{tv_slices, TransportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid metric configuration: {0}")]
    Config(String),
    #[error("distance ({row}, {col}) = {value} is outside [0, {bound}]")]
    OutOfRange { row: usize, col: usize, value: f64, bound: f64 },
    #[error("distance matrix has {found} states, MDP has {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("time budget exhausted after {0:?}")]
    DeadlineExceeded(Duration),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Which metric produced a [`DistanceMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fix,
    FixReopt,
    Sample,
    Tv,
    Bisim,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Fix, Method::FixReopt, Method::Sample, Method::Tv, Method::Bisim];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fix => "fix",
            Method::FixReopt => "fix-reopt",
            Method::Sample => "sample",
            Method::Tv => "tv",
            Method::Bisim => "bisim",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected fix, fix-reopt, sample, tv or bisim)"))
    }
}

/// How each Kantorovich cell is solved by the exact fixed-point iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Cold,
    /// Restart each cell from its optimal basis of the previous iteration.
    Warm,
}

/// Parameters shared by the iterative metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricRunConfig {
    pub c: f64,
    pub tol: f64,
    pub backend: Backend,
    /// Transition samples drawn per (state, action) by the sampled metric.
    pub samples: usize,
    pub runs: usize,
    pub seed: u64,
}

impl Default for MetricRunConfig {
    fn default() -> Self {
        Self { c: 0.9, tol: 1e-4, backend: Backend::Cold, samples: 10, runs: 30, seed: 0 }
    }
}

impl MetricRunConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        check_c(self.c)?;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(MetricError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.samples == 0 {
            return Err(MetricError::Config("samples must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(MetricError::Config("runs must be at least 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_c(c: f64) -> Result<(), MetricError> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(MetricError::Config(format!("c must lie in (0, 1), got {c}")))
    }
}

/// A pseudometric over the states of one MDP, with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    d: SquareMatrix,
    c: f64,
    method: Method,
    iterations: usize,
    certified_bound: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
}

impl DistanceMatrix {
    pub(crate) fn new(d: SquareMatrix, c: f64, method: Method) -> Self {
        Self { d, c, method, iterations: 0, certified_bound: None, tol: None, seed: None }
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.d
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.d
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.d.get(s, t)
    }

    pub fn n(&self) -> usize {
        self.d.n()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Applications of the update operator performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// A-priori bound on the sup-norm distance to the exact fixed point
    /// (`None` for the one-shot methods).
    pub fn certified_bound(&self) -> Option<f64> {
        self.certified_bound
    }

    pub fn tol(&self) -> Option<f64> {
        self.tol
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn metadata(&self) -> DistanceMetadata {
        DistanceMetadata {
            method: self.method,
            c: self.c,
            tol: self.tol,
            iterations: self.iterations,
            certified_bound: self.certified_bound,
            seed: self.seed,
            n_states: self.n(),
        }
    }

    /// Largest violation of symmetry, zero diagonal, nonnegativity or the
    /// triangle inequality; 0 for an exact pseudometric.
    pub fn pseudometric_violation(&self) -> f64 {
        pseudometric_violation(&self.d)
    }
}

impl AsRef<SquareMatrix> for DistanceMatrix {
    fn as_ref(&self) -> &SquareMatrix {
        &self.d
    }
}

/// See [`DistanceMatrix::pseudometric_violation`].
pub fn pseudometric_violation(d: &SquareMatrix) -> f64 {
    let n = d.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max(d.get(i, i).abs());
        for j in 0..n {
            worst = worst.max(-d.get(i, j)).max((d.get(i, j) - d.get(j, i)).abs());
            for k in 0..n {
                worst = worst.max(d.get(i, k) - d.get(i, j) - d.get(j, k));
            }
        }
    }
    worst
}

/// One-shot metric `max_a(|Δr| + c·R/(1−c)·dist(P(s,a), P(s',a)))`.
fn one_shot(mdp: &Mdp, c: f64, method: Method, dist: impl Fn(&[f64], &[f64]) -> f64) -> Result<DistanceMatrix, MetricError> {
    check_c(c)?;
    let n = mdp.n_states();
    let spread = mdp.reward_spread();
    let scale = if spread == 0.0 { 0.0 } else { c * spread / (1.0 - c) };
    let mut d = SquareMatrix::zeros(n);
    for s in 0..n {
        for t in (s + 1)..n {
            let v = (0..mdp.n_actions())
                .map(|a| (mdp.reward(s, a) - mdp.reward(t, a)).abs() + scale * dist(mdp.next(s, a), mdp.next(t, a)))
                .fold(0.0, f64::max);
            d.set(s, t, v);
            d.set(t, s, v);
        }
    }
    let mut out = DistanceMatrix::new(d, c, method);
    out.iterations = 1;
    Ok(out)
}

/// Total-variation metric `d_TV`.
pub fn tv_metric(mdp: &Mdp, c: f64) -> Result<DistanceMatrix, MetricError> {
    one_shot(mdp, c, Method::Tv, tv_slices)
}

/// Total variation over bisimulation classes, `d_~`.
pub fn bisim_tv_metric(mdp: &Mdp, c: f64) -> Result<DistanceMatrix, MetricError> {
    check_c(c)?;
    let part = bisimulation_partition(mdp);
    bisim_tv_metric_with(mdp, c, &part)
}

/// [`bisim_tv_metric`] with a precomputed partition.
pub fn bisim_tv_metric_with(mdp: &Mdp, c: f64, part: &Partition) -> Result<DistanceMatrix, MetricError> {
    if part.n_states() != mdp.n_states() {
        return Err(MetricError::SizeMismatch { expected: mdp.n_states(), found: part.n_states() });
    }
    one_shot(mdp, c, Method::Bisim, |p, q| class_tv_slices(p, q, part))
}

/// Runs `method` with `cfg` (`cfg.c` is the metric discount).
pub fn compute_metric(mdp: &Mdp, method: Method, cfg: &MetricRunConfig, deadline: Deadline) -> Result<DistanceMatrix, MetricError> {
    cfg.validate()?;
    deadline.check()?;
    match method {
        Method::Fix | Method::FixReopt => {
            let backend = if method == Method::Fix { Backend::Cold } else { Backend::Warm };
            fixed_point::fixed_point_until(mdp, &MetricRunConfig { backend, ..cfg.clone() }, deadline)
        }
        Method::Sample => fixed_point::sampled_until(mdp, cfg, deadline),
        Method::Tv => tv_metric(mdp, cfg.c),
        Method::Bisim => bisim_tv_metric(mdp, cfg.c),
    }
}
