//! Finite MDP model: validation, benchmark generators, file I/O and exact
//! value iteration.

mod benchmarks;
mod io;
mod value_iteration;

pub use benchmarks::{make_coffee_robot, make_gridworld, CoffeeFeature, Heading, COFFEE_ACTIONS};
pub use io::{load_mdp, mdp_from_json, mdp_to_json, save_mdp, MdpFileError, MDP_SCHEMA};
pub use value_iteration::{value_iteration, ValueFunction};

use thiserror::Error;

/// Allowed deviation of a transition row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("an MDP needs at least one state")]
    NoStates,
    #[error("an MDP needs at least one action")]
    NoActions,
    #[error("{what} has length {found}, expected {expected}")]
    Shape { what: &'static str, expected: usize, found: usize },
    #[error("reward for state {state}, action {action} is not finite")]
    NonFiniteReward { state: usize, action: usize },
    #[error("probability P[{state}, {action}, {next}] is not finite")]
    NonFiniteProbability { state: usize, action: usize, next: usize },
    #[error("negative probability {value} at P[{state}, {action}, {next}]")]
    NegativeProbability { state: usize, action: usize, next: usize, value: f64 },
    #[error("row not stochastic: state {state}, action {action} sums to {sum}")]
    NonStochasticRow { state: usize, action: usize, sum: f64 },
    #[error("discount {0} is outside (0, 1)")]
    Discount(f64),
    #[error("tolerance {0} must be positive and finite")]
    Tolerance(f64),
    #[error("gridworld size {0} must be odd and positive")]
    GridSize(usize),
}

/// A finite Markov decision process with per-(state, action) rewards and
/// next-state distributions. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    /// `rewards[s * n_actions + a]`
    rewards: Vec<f64>,
    /// `transitions[(s * n_actions + a) * n_states + t]`
    transitions: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Mdp {
    /// Builds an MDP from flat row-major tables, checking every invariant.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, MdpError> {
        let mdp = Self { n_states, n_actions, rewards, transitions, labels };
        validate_mdp(&mdp)?;
        Ok(mdp)
    }

    /// Builds an MDP from `rewards[s][a]` and `transitions[s][a][t]`.
    pub fn from_nested(
        rewards: &[Vec<f64>],
        transitions: &[Vec<Vec<f64>>],
        labels: Option<Vec<String>>,
    ) -> Result<Self, MdpError> {
        let n_states = rewards.len();
        let n_actions = rewards.first().map_or(0, Vec::len);
        if n_states == 0 {
            return Err(MdpError::NoStates);
        }
        if n_actions == 0 {
            return Err(MdpError::NoActions);
        }
        for r in rewards {
            check_len("reward row", n_actions, r.len())?;
        }
        check_len("transition table", n_states, transitions.len())?;
        for per_state in transitions {
            check_len("transition action list", n_actions, per_state.len())?;
            for row in per_state {
                check_len("transition row", n_states, row.len())?;
            }
        }
        let flat_r = rewards.concat();
        let flat_p = transitions.iter().flat_map(|x| x.iter().flatten().copied()).collect();
        Self::new(n_states, n_actions, flat_r, flat_p, labels)
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.n_actions + action]
    }

    /// Next-state distribution of `action` taken in `state`.
    #[inline]
    pub fn next(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.n_actions + action) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Human-readable name of `state`, falling back to its index.
    pub fn label(&self, state: usize) -> String {
        match &self.labels {
            Some(l) => l[state].clone(),
            None => state.to_string(),
        }
    }

    pub fn rewards_nested(&self) -> Vec<Vec<f64>> {
        self.rewards.chunks(self.n_actions).map(<[f64]>::to_vec).collect()
    }

    pub fn transitions_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| self.next(s, a).to_vec()).collect())
            .collect()
    }

    /// `max_{s,s',a} |r(s,a) − r(s',a)|`.
    pub fn reward_spread(&self) -> f64 {
        (0..self.n_actions)
            .map(|a| {
                let (lo, hi) = (0..self.n_states)
                    .map(|s| self.reward(s, a))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Smallest and largest reward over all (state, action).
    pub fn reward_range(&self) -> (f64, f64) {
        self.rewards
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)))
    }

    /// Copy with `delta` added to every reward.
    pub fn shift_rewards(&self, delta: f64) -> Result<Mdp, MdpError> {
        let rewards = self.rewards.iter().map(|r| r + delta).collect();
        Mdp::new(self.n_states, self.n_actions, rewards, self.transitions.clone(), self.labels.clone())
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), MdpError> {
    if expected == found {
        Ok(())
    } else {
        Err(MdpError::Shape { what, expected, found })
    }
}

/// Checks every [`Mdp`] invariant, reporting the first violation found in
/// (state, action, next-state) order.
pub fn validate_mdp(mdp: &Mdp) -> Result<(), MdpError> {
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    if ns == 0 {
        return Err(MdpError::NoStates);
    }
    if na == 0 {
        return Err(MdpError::NoActions);
    }
    check_len("rewards", ns * na, mdp.rewards.len())?;
    check_len("transitions", ns * na * ns, mdp.transitions.len())?;
    if let Some(labels) = &mdp.labels {
        check_len("labels", ns, labels.len())?;
    }
    for state in 0..ns {
        for action in 0..na {
            if !mdp.reward(state, action).is_finite() {
                return Err(MdpError::NonFiniteReward { state, action });
            }
            let row = mdp.next(state, action);
            for (next, &value) in row.iter().enumerate() {
                if !value.is_finite() {
                    return Err(MdpError::NonFiniteProbability { state, action, next });
                }
                if value < 0.0 {
                    return Err(MdpError::NegativeProbability { state, action, next, value });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MdpError::NonStochasticRow { state, action, sum });
            }
        }
    }
    Ok(())
}
