//! Greedy state aggregation under a distance matrix, the aggregate MDP it
//! induces, and the value error that aggregation costs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisim::{Partition, PartitionError};
use crate::matrix::SquareMatrix;
use crate::mdp::{value_iteration, Mdp, MdpError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("k = {k} is outside 1..={n_states}")]
    KOutOfRange { k: usize, n_states: usize },
    #[error("epsilon {0} must be finite and nonnegative")]
    Epsilon(f64),
    #[error("partition covers {found} states, MDP has {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    ToK,
    Epsilon,
}

/// One merge step. `i` and `j` name the merged blocks by their smallest
/// state (for an ε-accretion step, `j` is the state that joined).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "AggregationFile", try_from = "AggregationFile")]
pub struct AggregationResult {
    pub partition: Partition,
    pub trace: Vec<Merge>,
    pub method: AggregationMethod,
    /// `k` or `ε`.
    pub parameter: f64,
}

#[derive(Serialize, Deserialize)]
struct AggregationFile {
    method: AggregationMethod,
    parameter: f64,
    blocks: Vec<Vec<usize>>,
    merge_trace: Vec<Merge>,
}

impl From<AggregationResult> for AggregationFile {
    fn from(r: AggregationResult) -> Self {
        AggregationFile { method: r.method, parameter: r.parameter, blocks: r.partition.blocks().to_vec(), merge_trace: r.trace }
    }
}

impl TryFrom<AggregationFile> for AggregationResult {
    type Error = PartitionError;

    fn try_from(f: AggregationFile) -> Result<Self, Self::Error> {
        let n = f.blocks.iter().map(Vec::len).sum();
        Ok(AggregationResult {
            partition: Partition::from_blocks(f.blocks, n)?,
            trace: f.merge_trace,
            method: f.method,
            parameter: f.parameter,
        })
    }
}

/// Single-linkage agglomeration from singletons down to `k` blocks. Each
/// step merges the two closest blocks (closest pair of members); ties go to
/// the lexicographically smallest pair of block representatives.
pub fn aggregate_to_k(dist: &SquareMatrix, k: usize) -> Result<AggregationResult, AggregateError> {
    let n = dist.n();
    if k < 1 || k > n {
        return Err(AggregateError::KOutOfRange { k, n_states: n });
    }
    // blocks are named by their smallest member
    let mut link = dist.clone();
    let mut active = vec![true; n];
    let mut label: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(n - k);
    for _ in 0..(n - k) {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in (0..n).filter(|&a| active[a]) {
            for b in ((a + 1)..n).filter(|&b| active[b]) {
                let d = link.get(a, b);
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((a, b, d));
                }
            }
        }
        let (a, b, distance) = best.expect("more than k blocks remain");
        trace.push(Merge { i: a, j: b, distance });
        active[b] = false;
        for x in (0..n).filter(|&x| active[x] && x != a) {
            let v = link.get(a, x).min(link.get(b, x));
            link.set(a, x, v);
            link.set(x, a, v);
        }
        for l in label.iter_mut().filter(|l| **l == b) {
            *l = a;
        }
    }
    Ok(AggregationResult { partition: Partition::from_labels(&label), trace, method: AggregationMethod::ToK, parameter: k as f64 })
}

fn min_link(dist: &SquareMatrix, a: &[usize], b: &[usize]) -> f64 {
    a.iter()
        .flat_map(|&s| b.iter().map(move |&t| dist.get(s, t)))
        .fold(f64::INFINITY, f64::min)
}

/// Threshold aggregation: states are visited in index order and each joins
/// the first block holding a state closer than `epsilon` (or founds a new
/// block); blocks whose closest members are within `epsilon` are then merged
/// until none are.
pub fn aggregate_epsilon(dist: &SquareMatrix, epsilon: f64) -> Result<AggregationResult, AggregateError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(AggregateError::Epsilon(epsilon));
    }
    let n = dist.n();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut trace = Vec::new();
    for s in 0..n {
        let joined = blocks.iter().position(|b| b.iter().any(|&t| dist.get(s, t) < epsilon));
        match joined {
            Some(b) => {
                trace.push(Merge { i: blocks[b][0], j: s, distance: min_link(dist, &blocks[b], &[s]) });
                blocks[b].push(s);
            }
            None => blocks.push(vec![s]),
        }
    }
    'merge: loop {
        for a in 0..blocks.len() {
            for b in (a + 1)..blocks.len() {
                let d = min_link(dist, &blocks[a], &blocks[b]);
                if d < epsilon {
                    trace.push(Merge { i: blocks[a][0], j: blocks[b][0], distance: d });
                    let moved = blocks.remove(b);
                    blocks[a].extend(moved);
                    blocks[a].sort_unstable();
                    continue 'merge;
                }
            }
        }
        break;
    }
    Ok(AggregationResult {
        partition: Partition::from_blocks(blocks, n)?,
        trace,
        method: AggregationMethod::Epsilon,
        parameter: epsilon,
    })
}

/// Block-level MDP: a block's reward is the mean of its members' rewards and
/// its transition to another block is the mean mass its members send there.
pub fn build_aggregate_mdp(mdp: &Mdp, part: &Partition) -> Result<Mdp, AggregateError> {
    if part.n_states() != mdp.n_states() {
        return Err(AggregateError::SizeMismatch { expected: mdp.n_states(), found: part.n_states() });
    }
    let (nb, na) = (part.n_blocks(), mdp.n_actions());
    let mut rewards = vec![0.0; nb * na];
    let mut transitions = vec![0.0; nb * na * nb];
    for (b, members) in part.blocks().iter().enumerate() {
        let w = 1.0 / members.len() as f64;
        for a in 0..na {
            rewards[b * na + a] = members.iter().map(|&s| mdp.reward(s, a)).sum::<f64>() * w;
            let row = &mut transitions[(b * na + a) * nb..(b * na + a + 1) * nb];
            for &s in members {
                for (slot, mass) in row.iter_mut().zip(part.block_masses(mdp.next(s, a))) {
                    *slot += mass;
                }
            }
            row.iter_mut().for_each(|x| *x *= w);
        }
    }
    let labels = part
        .blocks()
        .iter()
        .map(|m| format!("{{{}}}", m.iter().map(|s| mdp.label(*s)).collect::<Vec<_>>().join(",")))
        .collect();
    Ok(Mdp::new(nb, na, rewards, transitions, Some(labels))?)
}

/// `max_s |V*(s) − V*_agg([s])|`, both value functions solved to `tol`.
pub fn linf_error(mdp: &Mdp, part: &Partition, gamma: f64, tol: f64) -> Result<f64, AggregateError> {
    let agg = build_aggregate_mdp(mdp, part)?;
    let (orig, reduced) = rayon::join(|| value_iteration(mdp, gamma, tol), || value_iteration(&agg, gamma, tol));
    let (orig, reduced) = (orig?, reduced?);
    Ok((0..mdp.n_states())
        .map(|s| (orig.values[s] - reduced.values[part.block_of(s)]).abs())
        .fold(0.0, f64::max))
}
