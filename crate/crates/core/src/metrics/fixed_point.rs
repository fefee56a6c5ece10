//! Fixed-point iteration of the metric update, exact and sampled.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{check_c, Backend, DistanceMatrix, Method, MetricError, MetricRunConfig};
use crate::matrix::SquareMatrix;
use crate::mdp::Mdp;
use crate::transport::{draw_indices, empirical_tk, solve_supported, BasisHint, RngStream, Support};

/// Optional wall-clock limit for a metric computation.
#[derive(Clone, Copy, Debug)]
pub struct Deadline {
    start: Instant,
    budget: Option<Duration>,
}

impl Deadline {
    pub fn none() -> Self {
        Self { start: Instant::now(), budget: None }
    }

    pub fn after(budget: Duration) -> Self {
        Self { start: Instant::now(), budget: Some(budget) }
    }

    pub fn check(&self) -> Result<(), MetricError> {
        let elapsed = self.start.elapsed();
        match self.budget {
            Some(b) if elapsed >= b => Err(MetricError::DeadlineExceeded(elapsed)),
            _ => Ok(()),
        }
    }
}

/// Saved optimal bases, one slot per (unordered state pair, action).
#[derive(Clone, Debug)]
pub struct HintTable {
    n_actions: usize,
    slots: Vec<Option<BasisHint>>,
}

impl HintTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_actions, slots: vec![None; n_states * n_states.saturating_sub(1) / 2 * n_actions] }
    }

    /// Number of slots holding a basis.
    pub fn filled(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// How [`apply_f`] solves its Kantorovich cells.
#[derive(Clone, Debug)]
pub enum KantorovichBackend {
    Cold,
    Warm(HintTable),
}

impl KantorovichBackend {
    pub fn for_mdp(backend: Backend, mdp: &Mdp) -> Self {
        match backend {
            Backend::Cold => KantorovichBackend::Cold,
            Backend::Warm => KantorovichBackend::Warm(HintTable::new(mdp.n_states(), mdp.n_actions())),
        }
    }
}

/// Transition supports of every (state, action), precomputed once.
struct Dynamics {
    n: usize,
    na: usize,
    rewards: Vec<f64>,
    rows: Vec<Support>,
    pairs: Vec<(usize, usize)>,
}

impl Dynamics {
    fn new(mdp: &Mdp) -> Self {
        let (n, na) = (mdp.n_states(), mdp.n_actions());
        let rows = (0..n).flat_map(|s| (0..na).map(move |a| (s, a))).map(|(s, a)| Support::of(mdp.next(s, a))).collect();
        let rewards = (0..n).flat_map(|s| (0..na).map(move |a| (s, a))).map(|(s, a)| mdp.reward(s, a)).collect();
        let pairs = (0..n).flat_map(|s| ((s + 1)..n).map(move |t| (s, t))).collect();
        Self { n, na, rewards, rows, pairs }
    }

    fn reward_gap(&self, s: usize, t: usize, a: usize) -> f64 {
        (self.rewards[s * self.na + a] - self.rewards[t * self.na + a]).abs()
    }

    fn row(&self, s: usize, a: usize) -> &Support {
        &self.rows[s * self.na + a]
    }
}

/// Kantorovich distance of one cell. Identical rows cost nothing and two
/// point masses cost their ground distance; anything else goes to the solver.
fn cell(h: &SquareMatrix, n: usize, p: &Support, q: &Support, slot: Option<&mut Option<BasisHint>>) -> f64 {
    if p == q {
        return 0.0;
    }
    if p.is_point() && q.is_point() {
        return h.get(p.index[0] as usize, q.index[0] as usize);
    }
    let hint = slot.as_ref().and_then(|s| s.as_ref());
    let (plan, _) = solve_supported(h, n, p, q, hint).expect("transport solve on validated inputs");
    let cost = plan.cost();
    if let Some(slot) = slot {
        *slot = Some(plan.into_hint());
    }
    cost
}

fn symmetric_from_pairs(n: usize, pairs: &[(usize, usize)], values: &[f64]) -> SquareMatrix {
    let mut d = SquareMatrix::zeros(n);
    for (&(s, t), &v) in pairs.iter().zip(values) {
        d.set(s, t, v);
        d.set(t, s, v);
    }
    d
}

fn apply_exact(dyn_: &Dynamics, h: &SquareMatrix, c: f64, backend: &mut KantorovichBackend) -> SquareMatrix {
    let value = |(s, t): (usize, usize), mut slots: Option<&mut [Option<BasisHint>]>| {
        (0..dyn_.na)
            .map(|a| {
                let slot = slots.as_deref_mut().map(|x| &mut x[a]);
                dyn_.reward_gap(s, t, a) + c * cell(h, dyn_.n, dyn_.row(s, a), dyn_.row(t, a), slot)
            })
            .fold(0.0, f64::max)
    };
    let values: Vec<f64> = match backend {
        KantorovichBackend::Cold => dyn_.pairs.par_iter().map(|&st| value(st, None)).collect(),
        KantorovichBackend::Warm(table) => dyn_
            .pairs
            .par_iter()
            .zip(table.slots.par_chunks_mut(table.n_actions))
            .map(|(&st, slots)| value(st, Some(slots)))
            .collect(),
    };
    symmetric_from_pairs(dyn_.n, &dyn_.pairs, &values)
}

fn check_in_space(h: &SquareMatrix, n: usize, bound: f64) -> Result<(), MetricError> {
    if h.n() != n {
        return Err(MetricError::SizeMismatch { expected: n, found: h.n() });
    }
    let limit = bound * (1.0 + 1e-9) + 1e-12;
    for row in 0..n {
        for col in 0..n {
            let value = h.get(row, col);
            if !(value >= 0.0 && value <= limit) {
                return Err(MetricError::OutOfRange { row, col, value, bound });
            }
        }
    }
    Ok(())
}

/// One application of the metric update to `h`, which must be nonnegative
/// and bounded by `R/(1−c)`. A warm backend reads and refreshes the saved
/// basis of every cell it solves.
pub fn apply_f(h: &SquareMatrix, mdp: &Mdp, c: f64, backend: &mut KantorovichBackend) -> Result<DistanceMatrix, MetricError> {
    check_c(c)?;
    check_in_space(h, mdp.n_states(), mdp.reward_spread() / (1.0 - c))?;
    if let KantorovichBackend::Warm(table) = backend {
        if table.slots.len() != HintTable::new(mdp.n_states(), mdp.n_actions()).slots.len() {
            return Err(MetricError::Config("hint table was built for a different MDP".into()));
        }
    }
    let method = match backend {
        KantorovichBackend::Cold => Method::Fix,
        KantorovichBackend::Warm(_) => Method::FixReopt,
    };
    let d = apply_exact(&Dynamics::new(mdp), h, c, backend);
    let mut out = DistanceMatrix::new(d, c, method);
    out.iterations = 1;
    Ok(out)
}

/// Iterates `step` from zero until `cⁿ/(1−c)·‖F(0)‖ ≤ tol`. `‖F(0)‖` is the
/// reward spread `R`, so every metric here stops after the same count.
fn iterate(
    n: usize,
    spread: f64,
    cfg: &MetricRunConfig,
    deadline: Deadline,
    mut step: impl FnMut(&SquareMatrix) -> SquareMatrix,
) -> Result<(SquareMatrix, usize, f64), MetricError> {
    let c = cfg.c;
    let mut h = SquareMatrix::zeros(n);
    if spread == 0.0 {
        return Ok((h, 0, 0.0));
    }
    let mut iterations = 0;
    let mut factor = 1.0 / (1.0 - c);
    loop {
        deadline.check()?;
        h = step(&h);
        iterations += 1;
        factor *= c;
        if factor * spread <= cfg.tol {
            return Ok((h, iterations, factor * spread));
        }
    }
}

pub(crate) fn fixed_point_until(mdp: &Mdp, cfg: &MetricRunConfig, deadline: Deadline) -> Result<DistanceMatrix, MetricError> {
    cfg.validate()?;
    let dyn_ = Dynamics::new(mdp);
    let mut backend = KantorovichBackend::for_mdp(cfg.backend, mdp);
    let (d, iterations, bound) =
        iterate(mdp.n_states(), mdp.reward_spread(), cfg, deadline, |h| apply_exact(&dyn_, h, cfg.c, &mut backend))?;
    let method = match cfg.backend {
        Backend::Cold => Method::Fix,
        Backend::Warm => Method::FixReopt,
    };
    let mut out = DistanceMatrix::new(d, cfg.c, method);
    out.iterations = iterations;
    out.certified_bound = Some(bound);
    out.tol = Some(cfg.tol);
    Ok(out)
}

/// Exact fixed-point metric, to within `cfg.tol` in sup norm. `cfg.backend`
/// selects cold solves (`fix`) or basis reuse across iterations (`fix-reopt`).
pub fn fixed_point_metric(mdp: &Mdp, cfg: &MetricRunConfig) -> Result<DistanceMatrix, MetricError> {
    fixed_point_until(mdp, cfg, Deadline::none())
}

fn sampled_run(mdp: &Mdp, dyn_: &Dynamics, cfg: &MetricRunConfig, run: usize, deadline: Deadline) -> Result<DistanceMatrix, MetricError> {
    let mut rng = RngStream::new(cfg.seed, run as u64);
    let draws: Vec<Vec<usize>> = (0..dyn_.n)
        .flat_map(|s| (0..dyn_.na).map(move |a| (s, a)))
        .map(|(s, a)| draw_indices(mdp.next(s, a), cfg.samples, &mut rng))
        .collect();
    let na = dyn_.na;
    let (d, iterations, bound) = iterate(dyn_.n, mdp.reward_spread(), cfg, deadline, |h| {
        let values: Vec<f64> = dyn_
            .pairs
            .par_iter()
            .map(|&(s, t)| {
                (0..na)
                    .map(|a| dyn_.reward_gap(s, t, a) + cfg.c * empirical_tk(h, &draws[s * na + a], &draws[t * na + a]))
                    .fold(0.0, f64::max)
            })
            .collect();
        symmetric_from_pairs(dyn_.n, &dyn_.pairs, &values)
    })?;
    let mut out = DistanceMatrix::new(d, cfg.c, Method::Sample);
    out.iterations = iterations;
    out.certified_bound = Some(bound);
    out.tol = Some(cfg.tol);
    out.seed = Some(cfg.seed);
    Ok(out)
}

pub(crate) fn sampled_runs_until(mdp: &Mdp, cfg: &MetricRunConfig, deadline: Deadline) -> Result<Vec<DistanceMatrix>, MetricError> {
    cfg.validate()?;
    let dyn_ = Dynamics::new(mdp);
    (0..cfg.runs)
        .into_par_iter()
        .map(|run| sampled_run(mdp, &dyn_, cfg, run, deadline))
        .collect()
}

pub(crate) fn sampled_until(mdp: &Mdp, cfg: &MetricRunConfig, deadline: Deadline) -> Result<DistanceMatrix, MetricError> {
    let runs = sampled_runs_until(mdp, cfg, deadline)?;
    let n = mdp.n_states();
    let mut sum = SquareMatrix::zeros(n);
    for r in &runs {
        for s in 0..n {
            for t in 0..n {
                sum.set(s, t, sum.get(s, t) + r.get(s, t));
            }
        }
    }
    let k = runs.len() as f64;
    let mean = SquareMatrix::from_fn(n, |s, t| sum.get(s, t) / k);
    let first = &runs[0];
    let mut out = DistanceMatrix::new(mean, cfg.c, Method::Sample);
    out.iterations = first.iterations;
    out.certified_bound = first.certified_bound;
    out.tol = Some(cfg.tol);
    out.seed = Some(cfg.seed);
    Ok(out)
}

/// The individual per-run matrices behind [`sampled_metric`]. Run `r` draws
/// its samples from stream `r` of `cfg.seed`.
pub fn sampled_runs(mdp: &Mdp, cfg: &MetricRunConfig) -> Result<Vec<DistanceMatrix>, MetricError> {
    sampled_runs_until(mdp, cfg, Deadline::none())
}

/// Sampled fixed-point metric: each run fixes `cfg.samples` draws per
/// (state, action), iterates the update with assignment-based transport on
/// those samples, and the runs are averaged entrywise.
pub fn sampled_metric(mdp: &Mdp, cfg: &MetricRunConfig) -> Result<DistanceMatrix, MetricError> {
    sampled_until(mdp, cfg, Deadline::none())
}
