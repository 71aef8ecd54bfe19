//! Training with dynamically re-searched learning rates.
//!
//! The loop keeps the best batch loss seen so far and a stall counter. When
//! the counter reaches the tolerance, the grid search is re-run around the
//! current rate from the current parameters and the counter restarts. The best
//! loss itself is never reset.

use serde::{Deserialize, Serialize};

use super::clock::CompensatedSum;
use super::grid::{find_lr, GridSpec, TrialSettings};
use super::step::{AdamState, OptimizerKind};
use super::Problem;
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{axpy, Vector};
use crate::rng::{tag, RngStream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveTrainerConfig {
    /// Training batch size `M`.
    pub batch: usize,
    /// Test-set size `N` used to score grid candidates.
    pub test_size: usize,
    /// Optimizer steps per grid candidate.
    pub trial_steps: usize,
    /// Consecutive non-improving steps that trigger a re-search.
    pub tolerance: usize,
    /// Number of grid candidates.
    pub grid_size: usize,
    /// Grid ratio, `> 1`.
    pub eta: f64,
    /// Initial grid center.
    pub gamma0: f64,
    /// Total training steps.
    pub steps: usize,
    pub optimizer: OptimizerKind,
}

impl AdaptiveTrainerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("batch", self.batch),
            ("test_size", self.test_size),
            ("trial_steps", self.trial_steps),
            ("tolerance", self.tolerance),
            ("grid_size", self.grid_size),
        ] {
            if v == 0 {
                return invalid(format!("{name} must be at least 1"));
            }
        }
        GridSpec::new(self.grid_size, self.eta, self.gamma0)?;
        self.optimizer.validate()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec { k: self.grid_size, eta: self.eta, center: self.gamma0 }
    }

    pub fn trial(&self) -> TrialSettings {
        TrialSettings { batch: self.batch, test_size: self.test_size, steps: self.trial_steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    None,
    /// New best batch loss.
    Improve,
    /// Learning rate re-searched after this step.
    Research,
    /// Learning rate lowered after this step (adaptive quadratic rule).
    LrDecrease,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Event::None => "none",
            Event::Improve => "improve",
            Event::Research => "research",
            Event::LrDecrease => "lr_decrease",
        }
    }
}

/// One row per training step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    /// Batch loss at the parameters before the step's update.
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    /// Learning rate used by this step.
    pub lr: f64,
    /// Sum of the learning rates up to and including this step.
    pub clock: f64,
    pub event: Event,
    /// Stall counter after this step (not part of the CSV schema).
    #[serde(skip)]
    pub stall: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    /// Step after which the search ran; `0` for the initial search.
    pub step: u64,
    pub center: f64,
    pub chosen: f64,
    pub trials: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub theta: Vector,
    pub initial_lr: f64,
    pub trace: Vec<TraceRecord>,
    pub searches: Vec<SearchRecord>,
}

/// Periodic held-out evaluation written into `TraceRecord::test_loss`.
#[derive(Clone, Copy)]
pub struct Evaluation<'a> {
    pub every: usize,
    pub f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
}

fn stream_for_training(stream: &RngStream) -> RngStream {
    stream.child(StreamId::new(tag::TRAIN, 0, 0))
}

#[allow(clippy::too_many_arguments)]
fn run<P: Problem>(
    problem: &P,
    theta0: &[f64],
    config: &AdaptiveTrainerConfig,
    stream: &RngStream,
    eval: Option<Evaluation<'_>>,
    adaptive: bool,
) -> Result<TrainOutcome> {
    config.validate()?;
    check_dim(problem.param_dim(), theta0.len())?;
    if let Some(e) = &eval {
        if e.every == 0 {
            return invalid("evaluation interval must be at least 1");
        }
    }

    let mut searches = Vec::new();
    let mut gamma = if adaptive {
        let out = find_lr(problem, theta0, &config.grid(), &config.trial(), &config.optimizer, stream, 0)?;
        searches.push(SearchRecord { step: 0, center: config.gamma0, chosen: out.best, trials: out.trials });
        out.best
    } else {
        config.gamma0
    };
    let initial_lr = gamma;

    let mut theta = theta0.to_vec();
    let mut adam = AdamState::new(theta.len());
    let mut train = stream_for_training(stream);
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut clock = CompensatedSum::default();
    let mut round = 0u64;
    let mut trace = Vec::with_capacity(config.steps);

    for i in 1..=config.steps {
        let batch = problem.sample_batch(&mut train, config.batch);
        let (loss, g) = problem.loss_and_grad(&theta, &batch);
        if !loss.is_finite() {
            return Err(Error::NumericFailure(format!("non-finite training loss at step {i}")));
        }
        match &config.optimizer {
            OptimizerKind::Sgd => axpy(-gamma, &g, &mut theta),
            OptimizerKind::Adam(cfg) => adam.update(&mut theta, gamma, &g, cfg),
        }
        let used = gamma;
        clock.add(used);

        let mut event = Event::None;
        if loss < best {
            best = loss;
            stall = 0;
            event = Event::Improve;
        } else {
            stall += 1;
        }
        if stall == config.tolerance {
            if adaptive {
                round += 1;
                let center = gamma;
                let grid = config.grid().recentered(center);
                let out = find_lr(problem, &theta, &grid, &config.trial(), &config.optimizer, stream, round)?;
                gamma = out.best;
                searches.push(SearchRecord { step: i as u64, center, chosen: gamma, trials: out.trials });
                event = Event::Research;
            }
            stall = 0;
        }

        let test_loss = eval.filter(|e| i % e.every == 0 || i == config.steps).map(|e| (e.f)(&theta));
        trace.push(TraceRecord {
            step: i as u64,
            train_loss: loss,
            test_loss,
            lr: used,
            clock: clock.value(),
            event,
            stall,
        });
    }

    Ok(TrainOutcome { theta, initial_lr, trace, searches })
}

/// Adaptive training: initial grid search centered on `gamma0`, then
/// re-searches whenever `tolerance` consecutive steps fail to beat the best
/// batch loss.
pub fn train_dynamic<P: Problem>(
    problem: &P,
    theta0: &[f64],
    config: &AdaptiveTrainerConfig,
    stream: &RngStream,
    eval: Option<Evaluation<'_>>,
) -> Result<TrainOutcome> {
    run(problem, theta0, config, stream, eval, true)
}

/// Same loop at the fixed rate `gamma0` without any search. Draws the same
/// training batches as [`train_dynamic`] for the same stream.
pub fn train_constant<P: Problem>(
    problem: &P,
    theta0: &[f64],
    config: &AdaptiveTrainerConfig,
    stream: &RngStream,
    eval: Option<Evaluation<'_>>,
) -> Result<TrainOutcome> {
    run(problem, theta0, config, stream, eval, false)
}
