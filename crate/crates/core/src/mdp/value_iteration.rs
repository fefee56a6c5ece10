use serde::{Deserialize, Serialize};

use super::{Mdp, MdpError};

/// Result of value iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub gamma: f64,
    /// `‖T V − V‖∞` of the returned `values`.
    pub residual: f64,
    pub iterations: usize,
}

/// One Bellman backup `out = T v`; returns `‖out − v‖∞`.
fn backup(mdp: &Mdp, gamma: f64, v: &[f64], out: &mut [f64]) -> f64 {
    let mut delta: f64 = 0.0;
    for (s, slot) in out.iter_mut().enumerate() {
        let best = (0..mdp.n_actions())
            .map(|a| {
                let expect: f64 = mdp.next(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
                mdp.reward(s, a) + gamma * expect
            })
            .fold(f64::NEG_INFINITY, f64::max);
        delta = delta.max((best - v[s]).abs());
        *slot = best;
    }
    delta
}

/// Value iteration from `V0 = 0`.
///
/// Iterates until a backup moves the values by at most `tol·(1 − γ)`, which
/// puts the returned iterate within `tol` of `V*` and its Bellman residual
/// below `tol`.
pub fn value_iteration(mdp: &Mdp, gamma: f64, tol: f64) -> Result<ValueFunction, MdpError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(MdpError::Discount(gamma));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(MdpError::Tolerance(tol));
    }
    let n = mdp.n_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let threshold = tol * (1.0 - gamma);
    let mut iterations = 0;
    loop {
        let step = backup(mdp, gamma, &v, &mut next);
        iterations += 1;
        std::mem::swap(&mut v, &mut next);
        if step <= threshold {
            break;
        }
    }
    let residual = backup(mdp, gamma, &v, &mut next);
    Ok(ValueFunction { values: v, gamma, residual, iterations })
}
