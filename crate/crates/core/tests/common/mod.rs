//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use statesim::mdp::Mdp;
use statesim::SquareMatrix;

/// Random distribution over `m` outcomes; each entry is zero with
/// probability `zero_frac` (at least one entry stays positive).
pub fn random_dist(rng: &mut impl Rng, m: usize, zero_frac: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m).map(|_| if rng.gen_bool(zero_frac) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..m)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

pub fn random_mdp(rng: &mut impl Rng, n_states: usize, n_actions: usize) -> Mdp {
    let rewards: Vec<Vec<f64>> = (0..n_states).map(|_| (0..n_actions).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let transitions: Vec<Vec<Vec<f64>>> =
        (0..n_states).map(|_| (0..n_actions).map(|_| random_dist(rng, n_states, 0.3)).collect()).collect();
    Mdp::from_nested(&rewards, &transitions, None).unwrap()
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when (numerically) singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Every vertex of the transportation polytope of `(p, q)`, found by trying
/// all sets of `m + n − 1` cells as a basis. A vertex is a list of
/// `(i, j, flow)`.
pub fn transport_vertices(p: &[f64], q: &[f64]) -> Vec<Vec<(usize, usize, f64)>> {
    let (m, n) = (p.len(), q.len());
    if m == 1 || n == 1 {
        let cells = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, if m == 1 { q[j] } else { p[i] }));
        return vec![cells.collect()];
    }
    let k = m + n - 1;
    let cells = m * n;
    let mut out = Vec::new();
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..cells).filter(|c| mask >> c & 1 == 1).map(|c| (c / n, c % n)).collect();
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (col, &(i, j)) in chosen.iter().enumerate() {
            a[i][col] = 1.0;
            if j < n - 1 {
                a[m + j][col] = 1.0;
            }
        }
        b[..m].copy_from_slice(p);
        b[m..].copy_from_slice(&q[..n - 1]);
        let Some(x) = solve(a, b) else { continue };
        if x.iter().any(|&v| v < -1e-12) {
            continue;
        }
        out.push(chosen.iter().zip(&x).map(|(&(i, j), &f)| (i, j, f.max(0.0))).collect());
    }
    out
}

pub fn vertex_cost(h: &SquareMatrix, v: &[(usize, usize, f64)]) -> f64 {
    v.iter().map(|&(i, j, f)| f * h.get(i, j)).sum()
}

/// Kantorovich distance as the cheapest polytope vertex.
pub fn brute_kantorovich(h: &SquareMatrix, p: &[f64], q: &[f64]) -> f64 {
    transport_vertices(p, q).iter().map(|v| vertex_cost(h, v)).fold(f64::INFINITY, f64::min)
}

/// The metric fixed point by plain iteration from zero, each Kantorovich
/// term taken as the cheapest polytope vertex.
pub fn brute_fixed_point(mdp: &Mdp, c: f64) -> SquareMatrix {
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    type Vertices = Vec<Vec<(usize, usize, f64)>>;
    let vertices: Vec<Vec<Vertices>> = (0..n)
        .map(|s| (0..n * na).map(|ta| transport_vertices(mdp.next(s, ta % na), mdp.next(ta / na, ta % na))).collect())
        .collect();
    let mut h = SquareMatrix::zeros(n);
    loop {
        let next = SquareMatrix::from_fn(n, |s, t| {
            (0..na)
                .map(|a| {
                    let tk = vertices[s][t * na + a].iter().map(|v| vertex_cost(&h, v)).fold(f64::INFINITY, f64::min);
                    (mdp.reward(s, a) - mdp.reward(t, a)).abs() + c * tk
                })
                .fold(0.0, f64::max)
        });
        let step = next.sup_distance(&h);
        h = next;
        if step < 1e-10 {
            return h;
        }
    }
}

/// Minimum assignment cost over all permutations; each candidate is summed
/// in row order.
pub fn exhaustive_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], used: &mut Vec<bool>, perm: &mut Vec<usize>, best: &mut f64) {
        let n = cost.len();
        if perm.len() == n {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            *best = best.min(total);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                go(cost, used, perm, best);
                perm.pop();
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, &mut vec![false; cost.len()], &mut Vec::new(), &mut best);
    best
}

/// All set partitions of `0..n`, as block-label vectors in restricted
/// growth form.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            if cur.is_empty() && l > 0 {
                break;
            }
            cur.push(l);
            go(n, cur, if cur.len() == 1 { 0 } else { max.max(l) }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        go(n, &mut Vec::new(), 0, &mut out);
    }
    out
}
