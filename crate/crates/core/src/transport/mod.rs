//! Distances between finite probability distributions.
//!
//! - [`total_variation`]: half the L1 distance.
//! - [`kantorovich`] / [`kantorovich_warm`]: exact optimal transport, solved
//!   as a transportation problem by network simplex. A solved plan carries a
//!   [`BasisHint`] that restarts the solver from the previous optimal basis
//!   when only the cost matrix changed.
//! - [`empirical_kantorovich`]: optimal transport between two equal-size
//!   samples, solved as an assignment problem by [`hungarian`].

mod hungarian;
mod sampling;
mod simplex;

pub use hungarian::{hungarian, Assignment};
pub use sampling::{empirical_kantorovich, sample_empirical, RngStream, SampleSet, SeedRecord};
pub use simplex::{BasisHint, HintRejection, PlanArc, TransportPlan, WarmStart, HINT_VERSION};

pub(crate) use hungarian::assign;
pub(crate) use sampling::{draw_indices, empirical_tk};
pub(crate) use simplex::{solve_supported, solve_transport, Support};

use thiserror::Error;

use crate::matrix::SquareMatrix;

/// Allowed deviation of a distribution's total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("probability {value} at index {index} is negative or not finite")]
    BadProbability { index: usize, value: f64 },
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("support sizes differ: {left} vs {right}")]
    SupportMismatch { left: usize, right: usize },
    #[error("cost matrix is {found}×{found}, expected {expected}×{expected}")]
    CostShape { expected: usize, found: usize },
    #[error("cost entry ({row}, {col}) = {value} is negative or not finite")]
    BadCost { row: usize, col: usize, value: f64 },
    #[error("assignment cost matrix is not square (row {row} has {len} entries, expected {expected})")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("assignment cost ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("sample lengths differ: {left} vs {right}")]
    SampleLength { left: usize, right: usize },
    #[error("sample index {index} outside a support of size {support}")]
    SampleOutOfSupport { index: usize, support: usize },
    #[error("network simplex exceeded {0} pivots")]
    PivotLimit(usize),
}

/// A probability vector over a finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, TransportError> {
        check_probs(&probs)?;
        Ok(Self { probs })
    }

    /// Point mass at `at` over a support of size `m`.
    pub fn point(m: usize, at: usize) -> Self {
        let mut probs = vec![0.0; m];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn uniform(m: usize) -> Self {
        Self { probs: vec![1.0 / m as f64; m] }
    }

    /// Empirical distribution of a sample over a support of size `m`.
    pub fn empirical(m: usize, draws: &[usize]) -> Result<Self, TransportError> {
        if draws.is_empty() {
            return Err(TransportError::EmptySample);
        }
        let mut counts = vec![0usize; m];
        for &x in draws {
            *counts
                .get_mut(x)
                .ok_or(TransportError::SampleOutOfSupport { index: x, support: m })? += 1;
        }
        let total = draws.len() as f64;
        Ok(Self { probs: counts.into_iter().map(|c| c as f64 / total).collect() })
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub(crate) fn check_probs(probs: &[f64]) -> Result<(), TransportError> {
    if probs.is_empty() {
        return Err(TransportError::EmptyDistribution);
    }
    if let Some((index, &value)) = probs.iter().enumerate().find(|(_, &p)| !(p >= 0.0 && p.is_finite())) {
        return Err(TransportError::BadProbability { index, value });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(TransportError::NotNormalized(sum));
    }
    Ok(())
}

fn check_same_support(p: &Distribution, q: &Distribution) -> Result<(), TransportError> {
    if p.len() != q.len() {
        return Err(TransportError::SupportMismatch { left: p.len(), right: q.len() });
    }
    Ok(())
}

pub(crate) fn check_cost(h: &SquareMatrix, m: usize) -> Result<(), TransportError> {
    if h.n() != m {
        return Err(TransportError::CostShape { expected: m, found: h.n() });
    }
    for row in 0..m {
        for col in 0..m {
            let value = h.get(row, col);
            if !(value >= 0.0 && value.is_finite()) {
                return Err(TransportError::BadCost { row, col, value });
            }
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `½ Σ |p(s) − q(s)|`.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64, TransportError> {
    check_same_support(p, q)?;
    Ok(tv_slices(&p.probs, &q.probs))
}

/// Exact Kantorovich distance `min_λ Σ λ(k,j) h(k,j)` over couplings `λ` of
/// `p` and `q`, solved from scratch.
pub fn kantorovich(h: &SquareMatrix, p: &Distribution, q: &Distribution) -> Result<TransportPlan, TransportError> {
    check_same_support(p, q)?;
    check_cost(h, p.len())?;
    Ok(solve_transport(h, &p.probs, &q.probs, None)?.0)
}

/// Same contract as [`kantorovich`], restarting from `hint` (a basis from an
/// earlier solve on the same `(p, q)` pair). An incompatible hint is reported
/// in the returned [`WarmStart`] and the problem is solved cold instead.
pub fn kantorovich_warm(
    h: &SquareMatrix,
    p: &Distribution,
    q: &Distribution,
    hint: &BasisHint,
) -> Result<(TransportPlan, WarmStart), TransportError> {
    check_same_support(p, q)?;
    check_cost(h, p.len())?;
    solve_transport(h, &p.probs, &q.probs, Some(hint))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn line_metric(m: usize) -> SquareMatrix {
        SquareMatrix::from_fn(m, |i, j| (i as f64 - j as f64).abs())
    }

    #[test]
    fn tv_examples() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
        assert_eq!(total_variation(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(total_variation(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75])).unwrap(), 0.25);
        assert_eq!(
            total_variation(&dist(&[1.0]), &dist(&[0.5, 0.5])),
            Err(TransportError::SupportMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn distribution_validation() {
        assert_eq!(Distribution::new(vec![]), Err(TransportError::EmptyDistribution));
        assert!(matches!(Distribution::new(vec![0.5, 0.4]), Err(TransportError::NotNormalized(_))));
        assert!(matches!(
            Distribution::new(vec![1.5, -0.5]),
            Err(TransportError::BadProbability { index: 1, .. })
        ));
        assert!(Distribution::new(vec![0.5, 0.5 + 1e-12]).is_ok());
    }

    #[test]
    fn identity_coupling_costs_nothing() {
        let p = dist(&[0.2, 0.3, 0.5]);
        let plan = kantorovich(&line_metric(3), &p, &p).unwrap();
        assert!(plan.cost().abs() < 1e-12);
        for i in 0..3 {
            assert!((plan.flow(i, i) - p.probs()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn point_masses_cost_ground_distance() {
        let h = line_metric(4);
        let plan = kantorovich(&h, &Distribution::point(4, 0), &Distribution::point(4, 3)).unwrap();
        assert_eq!(plan.cost(), 3.0);
    }

    #[test]
    fn shifted_mass_on_a_line() {
        let plan = kantorovich(&line_metric(3), &dist(&[0.5, 0.5, 0.0]), &dist(&[0.0, 0.5, 0.5])).unwrap();
        assert!((plan.cost() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_costs() {
        let p = Distribution::uniform(2);
        let mut h = line_metric(2);
        h.set(0, 1, -1.0);
        assert!(matches!(kantorovich(&h, &p, &p), Err(TransportError::BadCost { row: 0, col: 1, .. })));
        assert!(matches!(
            kantorovich(&line_metric(3), &p, &p),
            Err(TransportError::CostShape { expected: 2, found: 3 })
        ));
    }
}
