//! Hungarian algorithm (shortest augmenting paths with dual potentials), O(n³).

use super::TransportError;

/// Optimal assignment of rows to columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `permutation[row]` is the column assigned to `row`.
    pub permutation: Vec<usize>,
    /// `Σ_row cost[row][permutation[row]]`, summed in row order.
    pub total_cost: f64,
}

/// Minimum-cost perfect matching on an `n × n` cost given as a closure.
/// Entries must be finite.
pub(crate) fn assign(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based; column 0 is the virtual root of each augmenting search
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        min_slack.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let slack = cost(r0 - 1, col - 1) - u[r0] - v[col];
                if slack < min_slack[col] {
                    min_slack[col] = slack;
                    way[col] = col0;
                }
                if min_slack[col] < delta {
                    delta = min_slack[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_slack[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0; n];
    for col in 1..=n {
        permutation[owner[col] - 1] = col - 1;
    }
    permutation
}

/// Solves the square assignment problem `min_σ Σ_k cost[k][σ(k)]`.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment, TransportError> {
    let n = cost.len();
    for (row, r) in cost.iter().enumerate() {
        if r.len() != n {
            return Err(TransportError::NotSquare { row, len: r.len(), expected: n });
        }
        if let Some(col) = r.iter().position(|x| !x.is_finite()) {
            return Err(TransportError::NonFiniteCost { row, col });
        }
    }
    let permutation = assign(n, |i, j| cost[i][j]);
    let total_cost = permutation.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(Assignment { permutation, total_cost })
}
