//! Optimizers and learning-rate selection.
//!
//! Everything here works on a flat parameter vector through the [`Problem`]
//! trait, so the same trainers drive the quadratic testbed and the networks.

mod clock;
mod dynamic;
mod grid;
mod step;
mod theorem;

pub use clock::{nt_lookup, CompensatedSum, NtClock};
pub use dynamic::{
    train_constant, train_dynamic, AdaptiveTrainerConfig, Evaluation, Event, SearchRecord, TraceRecord,
    TrainOutcome,
};
pub use grid::{find_lr, find_lr_adam, find_lr_sgd, GridOutcome, GridSpec, TrialSettings};
pub use step::{adam_step, sgd_step, AdamConfig, AdamState, AdamVariant, OptimizerKind};
pub use theorem::{train_theorem1, Theorem1Outcome, Theorem1Sgd, Theorem1Step};

use crate::linalg::Vector;
use crate::rng::RngStream;

/// A stochastic objective `L(theta) = E[l(theta, X)]` seen through fresh
/// batches.
pub trait Problem: Sync {
    type Batch: Send;

    fn param_dim(&self) -> usize;

    fn sample_batch(&self, stream: &mut RngStream, size: usize) -> Self::Batch;

    /// Mean loss over the batch and its gradient.
    fn loss_and_grad(&self, theta: &[f64], batch: &Self::Batch) -> (f64, Vector);

    /// Mean loss over the batch; must agree with [`Problem::loss_and_grad`].
    fn loss(&self, theta: &[f64], batch: &Self::Batch) -> f64;
}
