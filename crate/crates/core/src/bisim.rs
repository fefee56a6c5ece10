//! Exact bisimulation by iterated partition refinement, and total variation
//! measured on bisimulation classes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::Mdp;
use crate::transport::Distribution;

/// Tolerance for equal rewards and equal block masses.
pub const BISIM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("state {0} appears in more than one block")]
    Duplicate(usize),
    #[error("state {0} is not covered by any block")]
    Missing(usize),
    #[error("state {state} is out of range for {n_states} states")]
    OutOfRange { state: usize, n_states: usize },
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("partition covers {found} states, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
}

/// Disjoint nonempty blocks covering `0..n_states`. Blocks are kept sorted,
/// ordered by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionFile", into = "PartitionFile")]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    blocks: Vec<Vec<usize>>,
}

impl TryFrom<PartitionFile> for Partition {
    type Error = PartitionError;

    fn try_from(f: PartitionFile) -> Result<Self, Self::Error> {
        let n = f.blocks.iter().map(Vec::len).sum();
        Partition::from_blocks(f.blocks, n)
    }
}

impl From<Partition> for PartitionFile {
    fn from(p: Partition) -> Self {
        PartitionFile { blocks: p.blocks }
    }
}

impl Partition {
    pub fn from_blocks(blocks: Vec<Vec<usize>>, n_states: usize) -> Result<Self, PartitionError> {
        let mut label = vec![usize::MAX; n_states];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::EmptyBlock(b));
            }
            for &s in block {
                let slot = label.get_mut(s).ok_or(PartitionError::OutOfRange { state: s, n_states })?;
                if *slot != usize::MAX {
                    return Err(PartitionError::Duplicate(s));
                }
                *slot = b;
            }
        }
        if let Some(s) = label.iter().position(|&b| b == usize::MAX) {
            return Err(PartitionError::Missing(s));
        }
        Ok(Self::from_labels(&label))
    }

    /// Partition grouping states with equal labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (s, l) in labels.iter().enumerate() {
            let b = *remap.entry(l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(s);
            block_of.push(b);
        }
        Self { blocks, block_of }
    }

    pub fn singletons(n_states: usize) -> Self {
        Self { blocks: (0..n_states).map(|s| vec![s]).collect(), block_of: (0..n_states).collect() }
    }

    pub fn single_block(n_states: usize) -> Self {
        Self { blocks: vec![(0..n_states).collect()], block_of: vec![0; n_states] }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    #[inline]
    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_states(&self) -> usize {
        self.block_of.len()
    }

    #[inline]
    pub fn same_block(&self, s: usize, t: usize) -> bool {
        self.block_of[s] == self.block_of[t]
    }

    /// True if every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n_states() == coarser.n_states()
            && self
                .blocks
                .iter()
                .all(|b| b.iter().all(|&s| coarser.same_block(s, b[0])))
    }

    /// Mass that `probs` puts on each block.
    pub fn block_masses(&self, probs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.blocks.len()];
        for (s, p) in probs.iter().enumerate() {
            out[self.block_of[s]] += p;
        }
        out
    }
}

fn within(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= BISIM_TOLERANCE)
}

/// Splits every block of `part` by (reward vector, per-action block masses).
/// States join the first sub-block whose founding state has a matching
/// signature.
pub(crate) fn refine(mdp: &Mdp, part: &Partition) -> Partition {
    let na = mdp.n_actions();
    let signature = |s: usize| -> Vec<f64> {
        let mut sig: Vec<f64> = (0..na).map(|a| mdp.reward(s, a)).collect();
        for a in 0..na {
            sig.extend(part.block_masses(mdp.next(s, a)));
        }
        sig
    };
    let sigs: Vec<Vec<f64>> = (0..mdp.n_states()).map(signature).collect();
    let mut labels = vec![0; mdp.n_states()];
    let mut founders: Vec<usize> = Vec::new();
    for s in 0..mdp.n_states() {
        let found = founders
            .iter()
            .position(|&f| part.same_block(f, s) && within(&sigs[f], &sigs[s]));
        labels[s] = found.unwrap_or_else(|| {
            founders.push(s);
            founders.len() - 1
        });
    }
    Partition::from_labels(&labels)
}

/// Coarsest partition whose blocks agree on every reward and on the mass
/// sent into every block, for every action. Refines from a single block
/// until nothing splits.
pub fn bisimulation_partition(mdp: &Mdp) -> Partition {
    let mut part = Partition::single_block(mdp.n_states());
    loop {
        let next = refine(mdp, &part);
        if next.n_blocks() == part.n_blocks() {
            return next;
        }
        part = next;
    }
}

#[inline]
pub(crate) fn class_tv_slices(p: &[f64], q: &[f64], part: &Partition) -> f64 {
    let pm = part.block_masses(p);
    let qm = part.block_masses(q);
    0.5 * pm.iter().zip(&qm).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `½ Σ_C |p(C) − q(C)|` over the blocks `C` of `part`.
pub fn class_tv(p: &Distribution, q: &Distribution, part: &Partition) -> Result<f64, PartitionError> {
    for len in [p.len(), q.len()] {
        if len != part.n_states() {
            return Err(PartitionError::SizeMismatch { expected: part.n_states(), found: len });
        }
    }
    Ok(class_tv_slices(p.probs(), q.probs(), part))
}
