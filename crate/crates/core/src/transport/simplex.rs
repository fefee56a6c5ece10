//! Network simplex on the bipartite transportation graph.
//!
//! Only the positive-probability entries of each marginal become nodes. A
//! basis is a spanning tree of `m + n − 1` arcs; its flows are fixed by the
//! marginals alone, so a basis that was optimal for one cost matrix is still
//! primal feasible for any other cost on the same `(p, q)` and can seed the
//! next solve.

use super::TransportError;
use crate::matrix::SquareMatrix;

/// Format version of [`BasisHint`]; hints carrying another version are refused.
pub const HINT_VERSION: u32 = 1;

/// Saved optimal basis of a transport solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisHint {
    version: u32,
    sources: Vec<u32>,
    targets: Vec<u32>,
    /// `(source position, target position)` into `sources` / `targets`
    arcs: Vec<(u32, u32)>,
}

impl BasisHint {
    pub fn from_raw_parts(version: u32, sources: Vec<u32>, targets: Vec<u32>, arcs: Vec<(u32, u32)>) -> Self {
        Self { version, sources, targets, arcs }
    }

    #[allow(clippy::type_complexity)]
    pub fn into_raw_parts(self) -> (u32, Vec<u32>, Vec<u32>, Vec<(u32, u32)>) {
        (self.version, self.sources, self.targets, self.arcs)
    }

    pub fn version(&self) -> u32 {
        self.version
    }
}

/// Why a hint was not used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HintRejection {
    Version { found: u32 },
    /// The hint was built for different supports of `p` or `q`.
    Support,
    Shape,
    NotATree,
    Infeasible,
}

/// How a solve was started.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WarmStart {
    Cold,
    Reused,
    Rejected(HintRejection),
}

impl WarmStart {
    pub fn fell_back(self) -> bool {
        matches!(self, WarmStart::Rejected(_))
    }
}

/// One basic arc of a plan, in the caller's state indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanArc {
    pub source: usize,
    pub target: usize,
    pub flow: f64,
}

/// An optimal coupling. Arcs not listed carry zero flow.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    size: usize,
    arcs: Vec<PlanArc>,
    cost: f64,
    pivots: usize,
    hint: BasisHint,
}

impl TransportPlan {
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn arcs(&self) -> &[PlanArc] {
        &self.arcs
    }

    pub fn flow(&self, source: usize, target: usize) -> f64 {
        self.arcs
            .iter()
            .filter(|a| a.source == source && a.target == target)
            .map(|a| a.flow)
            .sum()
    }

    pub fn dense_flow(&self) -> SquareMatrix {
        let mut out = SquareMatrix::zeros(self.size);
        for a in &self.arcs {
            out.set(a.source, a.target, out.get(a.source, a.target) + a.flow);
        }
        out
    }

    /// Number of simplex pivots this solve took.
    pub fn pivots(&self) -> usize {
        self.pivots
    }

    pub fn hint(&self) -> &BasisHint {
        &self.hint
    }

    pub fn into_hint(self) -> BasisHint {
        self.hint
    }
}

struct Network {
    m: usize,
    n: usize,
    supply: Vec<f64>,
    demand: Vec<f64>,
    /// `cost[i * n + j]`
    cost: Vec<f64>,
}

impl Network {
    fn nodes(&self) -> usize {
        self.m + self.n
    }

    fn ends(&self, arc: usize) -> (usize, usize) {
        (arc / self.n, self.m + arc % self.n)
    }

    /// Flows of the tree `basis`, by repeatedly peeling leaves. `None` if
    /// the arcs do not form a spanning tree.
    fn tree_flows(&self, basis: &[usize]) -> Option<Vec<f64>> {
        let nodes = self.nodes();
        if basis.len() + 1 != nodes {
            return None;
        }
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (pos, &arc) in basis.iter().enumerate() {
            let (u, v) = self.ends(arc);
            incident[u].push(pos);
            incident[v].push(pos);
        }
        let mut degree: Vec<usize> = incident.iter().map(Vec::len).collect();
        let mut remaining: Vec<f64> = self.supply.iter().chain(&self.demand).copied().collect();
        let mut used = vec![false; basis.len()];
        let mut flow = vec![0.0; basis.len()];
        let mut leaves: Vec<usize> = (0..nodes).rev().filter(|&u| degree[u] == 1).collect();
        let mut peeled = 0;
        while let Some(u) = leaves.pop() {
            if degree[u] != 1 {
                continue;
            }
            let pos = *incident[u].iter().find(|&&p| !used[p])?;
            let (a, b) = self.ends(basis[pos]);
            let v = if a == u { b } else { a };
            flow[pos] = remaining[u];
            remaining[v] -= remaining[u];
            used[pos] = true;
            degree[u] = 0;
            degree[v] -= 1;
            peeled += 1;
            if degree[v] == 1 {
                leaves.push(v);
            }
        }
        (peeled == basis.len()).then_some(flow)
    }

    fn northwest_corner(&self) -> Vec<usize> {
        let (m, n) = (self.m, self.n);
        let mut basis = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let (mut left, mut need) = (self.supply[0], self.demand[0]);
        loop {
            basis.push(i * n + j);
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || left < need {
                need -= left;
                i += 1;
                left = self.supply[i];
            } else {
                left -= need;
                j += 1;
                need = self.demand[j];
            }
        }
        basis
    }

    /// Node potentials with `pot[row] + pot[col] = cost` on every tree arc.
    fn potentials(&self, basis: &[usize]) -> Vec<f64> {
        let nodes = self.nodes();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for &arc in basis {
            let (u, v) = self.ends(arc);
            incident[u].push(arc);
            incident[v].push(arc);
        }
        let mut pot = vec![0.0; nodes];
        let mut seen = vec![false; nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &arc in &incident[u] {
                let (r, c) = self.ends(arc);
                let v = if r == u { c } else { r };
                if !seen[v] {
                    pot[v] = self.cost[arc] - pot[u];
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        pot
    }

    /// Basis positions on the tree path from `from` to `to`.
    fn tree_path(&self, basis: &[usize], from: usize, to: usize) -> Vec<usize> {
        let nodes = self.nodes();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (pos, &arc) in basis.iter().enumerate() {
            let (u, v) = self.ends(arc);
            incident[u].push(pos);
            incident[v].push(pos);
        }
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes];
        let mut seen = vec![false; nodes];
        let mut stack = vec![to];
        seen[to] = true;
        while let Some(u) = stack.pop() {
            if u == from {
                break;
            }
            for &pos in &incident[u] {
                let (a, b) = self.ends(basis[pos]);
                let v = if a == u { b } else { a };
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, pos));
                    stack.push(v);
                }
            }
        }
        let mut path = Vec::new();
        let mut at = from;
        while let Some((up, pos)) = parent[at] {
            path.push(pos);
            at = up;
        }
        path
    }
}

fn clamp_flows(flow: &mut [f64]) {
    for f in flow {
        if *f < 0.0 {
            *f = 0.0;
        }
    }
}

fn positive_support(probs: &[f64]) -> Vec<u32> {
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, _)| i as u32)
        .collect()
}

fn check_hint(net: &Network, hint: &BasisHint, src: &[u32], tgt: &[u32]) -> Result<(Vec<usize>, Vec<f64>), HintRejection> {
    if hint.version != HINT_VERSION {
        return Err(HintRejection::Version { found: hint.version });
    }
    if hint.sources != src || hint.targets != tgt {
        return Err(HintRejection::Support);
    }
    if hint.arcs.len() + 1 != net.nodes()
        || hint.arcs.iter().any(|&(i, j)| i as usize >= net.m || j as usize >= net.n)
    {
        return Err(HintRejection::Shape);
    }
    let basis: Vec<usize> = hint.arcs.iter().map(|&(i, j)| i as usize * net.n + j as usize).collect();
    let flow = net.tree_flows(&basis).ok_or(HintRejection::NotATree)?;
    if flow.iter().any(|&f| f < -1e-9) {
        return Err(HintRejection::Infeasible);
    }
    Ok((basis, flow))
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 64;

/// Positive-mass entries of a distribution, in index order.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Support {
    pub index: Vec<u32>,
    pub mass: Vec<f64>,
}

impl Support {
    pub fn of(probs: &[f64]) -> Self {
        let index = positive_support(probs);
        let mass = index.iter().map(|&i| probs[i as usize]).collect();
        Self { index, mass }
    }

    pub fn is_point(&self) -> bool {
        self.index.len() == 1
    }
}

/// Solves the transport problem for cost `h` between `p` and `q` (assumed
/// valid and of matching size), optionally from a saved basis.
pub(crate) fn solve_transport(
    h: &SquareMatrix,
    p: &[f64],
    q: &[f64],
    hint: Option<&BasisHint>,
) -> Result<(TransportPlan, WarmStart), TransportError> {
    solve_supported(h, p.len(), &Support::of(p), &Support::of(q), hint)
}

pub(crate) fn solve_supported(
    h: &SquareMatrix,
    size: usize,
    p: &Support,
    q: &Support,
    hint: Option<&BasisHint>,
) -> Result<(TransportPlan, WarmStart), TransportError> {
    let (src, tgt) = (p.index.clone(), q.index.clone());
    let (m, n) = (src.len(), tgt.len());
    let mut supply = p.mass.clone();
    let demand = q.mass.clone();
    // absorb the mass imbalance in the largest supply
    let imbalance = demand.iter().sum::<f64>() - supply.iter().sum::<f64>();
    let largest = (0..m).fold(0, |best, i| if supply[i] > supply[best] { i } else { best });
    supply[largest] += imbalance;

    let mut cost = Vec::with_capacity(m * n);
    for &i in &src {
        for &j in &tgt {
            cost.push(h.get(i as usize, j as usize));
        }
    }
    let scale = cost.iter().fold(1.0_f64, |a, &c| a.max(c.abs()));
    let eps = 1e-12 * scale;
    let net = Network { m, n, supply, demand, cost };

    let (mut basis, mut flow, start) = match hint.map(|h| check_hint(&net, h, &src, &tgt)) {
        Some(Ok((basis, flow))) => (basis, flow, WarmStart::Reused),
        other => {
            let basis = net.northwest_corner();
            let flow = net.tree_flows(&basis).expect("northwest corner rule builds a spanning tree");
            let start = match other {
                Some(Err(reason)) => WarmStart::Rejected(reason),
                _ => WarmStart::Cold,
            };
            (basis, flow, start)
        }
    };
    clamp_flows(&mut flow);

    let mut in_basis = vec![false; m * n];
    for &arc in &basis {
        in_basis[arc] = true;
    }
    let limit = 50 * (m * n + m + n) + 1000;
    let mut pivots = 0;
    let mut degenerate_run = 0;
    loop {
        let pot = net.potentials(&basis);
        let bland = degenerate_run > DEGENERATE_RUN;
        let mut entering = None;
        let mut best = -eps;
        for (arc, _) in in_basis.iter().enumerate().filter(|(_, &b)| !b) {
            let (u, v) = net.ends(arc);
            let reduced = net.cost[arc] - pot[u] - pot[v];
            if reduced < best {
                entering = Some(arc);
                if bland {
                    break;
                }
                best = reduced;
            }
        }
        let Some(entering) = entering else { break };
        if pivots == limit {
            return Err(TransportError::PivotLimit(limit));
        }
        pivots += 1;

        let (row, col) = net.ends(entering);
        // col → … → row; arcs alternate −θ, +θ, −θ, … starting at col
        let path = net.tree_path(&basis, col, row);
        let mut leaving = path[0];
        for &pos in path.iter().step_by(2).skip(1) {
            let (f, best) = (flow[pos], flow[leaving]);
            if f < best || (f == best && basis[pos] < basis[leaving]) {
                leaving = pos;
            }
        }
        let theta = flow[leaving].max(0.0);
        degenerate_run = if theta <= 1e-15 { degenerate_run + 1 } else { 0 };

        in_basis[basis[leaving]] = false;
        in_basis[entering] = true;
        basis[leaving] = entering;
        flow = net.tree_flows(&basis).expect("a pivot keeps the basis a spanning tree");
        clamp_flows(&mut flow);
    }

    let mut total = 0.0;
    let mut arcs = Vec::with_capacity(basis.len());
    for (pos, &arc) in basis.iter().enumerate() {
        let (i, j) = (arc / n, arc % n);
        total += flow[pos] * net.cost[arc];
        arcs.push(PlanArc { source: src[i] as usize, target: tgt[j] as usize, flow: flow[pos] });
    }
    let hint = BasisHint {
        version: HINT_VERSION,
        sources: src,
        targets: tgt,
        arcs: basis.iter().map(|&arc| ((arc / n) as u32, (arc % n) as u32)).collect(),
    };
    Ok((TransportPlan { size, arcs, cost: total, pivots, hint }, start))
}
