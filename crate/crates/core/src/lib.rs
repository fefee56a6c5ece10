//! Bisimulation metrics for finite Markov decision processes.
//!
//! Five state-similarity metrics are provided, all pseudometrics over the
//! states of an [`Mdp`](mdp::Mdp):
//!
//! | method      | what it computes                                              |
//! |-------------|---------------------------------------------------------------|
//! | `fix`       | exact fixed point, one network-simplex solve per cell          |
//! | `fix-reopt` | same fixed point, each solve restarted from the previous basis |
//! | `sample`    | fixed point of sampled dynamics, Hungarian solves, averaged    |
//! | `tv`        | one-shot bound from total variation                           |
//! | `bisim`     | one-shot bound from total variation over bisimulation classes |
//!
//! The [`aggregate`] module clusters states under any of them and measures
//! the value-function error of the aggregated model; [`harness`] runs whole
//! experiment sweeps.

pub mod aggregate;
pub mod bisim;
pub mod harness;
pub mod matrix;
pub mod mdp;
pub mod metrics;
pub mod numfmt;
pub mod transport;

pub use matrix::SquareMatrix;
