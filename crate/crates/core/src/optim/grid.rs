//! Grid-search learning-rate selection.
//!
//! Each candidate rate runs a few optimizer steps from the same starting point
//! on its own data stream and is scored on a fresh test set. The smallest
//! score wins; ties go to the smaller rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{AdamConfig, AdamState, AdamVariant, OptimizerKind};
use super::Problem;
use crate::error::{check_dim, invalid, Result};
use crate::linalg::axpy;
use crate::rng::{tag, RngStream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of candidates.
    pub k: usize,
    /// Ratio between neighbouring candidates.
    pub eta: f64,
    pub center: f64,
}

impl GridSpec {
    pub fn new(k: usize, eta: f64, center: f64) -> Result<Self> {
        let g = Self { k, eta, center };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("grid size must be at least 1");
        }
        if !(self.eta > 1.0) || !self.eta.is_finite() {
            return invalid(format!("grid ratio must exceed 1, got {}", self.eta));
        }
        if !(self.center > 0.0) || !self.center.is_finite() {
            return invalid(format!("grid center must be positive, got {}", self.center));
        }
        Ok(())
    }

    pub fn recentered(&self, center: f64) -> Self {
        Self { center, ..*self }
    }

    /// `center * eta^(j - (k + 1) / 2)` for `j = 1..=k`, increasing.
    pub fn candidates(&self) -> Vec<f64> {
        let mid = (self.k + 1) as f64 / 2.0;
        (1..=self.k).map(|j| self.center * self.eta.powf(j as f64 - mid)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSettings {
    /// Training batch size `M`.
    pub batch: usize,
    /// Test-set size `N`.
    pub test_size: usize,
    /// Optimizer steps per candidate.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub best: f64,
    /// `(candidate, test loss)` in grid order.
    pub trials: Vec<(f64, f64)>,
}

fn candidate_stream(base: &RngStream, round: u64, j: usize) -> RngStream {
    base.child(StreamId::new(tag::CANDIDATE, round, j as u64))
}

fn run_candidate<P: Problem>(
    problem: &P,
    theta0: &[f64],
    gamma: f64,
    trial: &TrialSettings,
    kind: &OptimizerKind,
    adam: Option<&mut AdamState>,
    stream: &mut RngStream,
) -> f64 {
    let mut theta = theta0.to_vec();
    let mut fresh = AdamState::new(theta.len());
    let state = adam.unwrap_or(&mut fresh);
    for i in 1..=trial.steps {
        let batch = problem.sample_batch(stream, trial.batch);
        let (_, g) = problem.loss_and_grad(&theta, &batch);
        match kind {
            OptimizerKind::Adam(cfg) => state.update_with_index(&mut theta, gamma, &g, cfg, i as u64),
            OptimizerKind::Sgd => axpy(-gamma, &g, &mut theta),
        }
    }
    let test = problem.sample_batch(stream, trial.test_size);
    problem.loss(&theta, &test)
}

/// Grid search over `grid.candidates()` starting from `theta0`.
///
/// Candidate `j` of search round `round` draws all of its data from
/// `stream.child((CANDIDATE, round, j))`, so the result does not depend on
/// evaluation order. Non-finite scores never win; if no score is finite the
/// grid center is returned.
pub fn find_lr<P: Problem>(
    problem: &P,
    theta0: &[f64],
    grid: &GridSpec,
    trial: &TrialSettings,
    kind: &OptimizerKind,
    stream: &RngStream,
    round: u64,
) -> Result<GridOutcome> {
    grid.validate()?;
    kind.validate()?;
    check_dim(problem.param_dim(), theta0.len())?;
    if trial.batch == 0 || trial.test_size == 0 {
        return invalid("batch and test sizes must be at least 1");
    }
    let cands = grid.candidates();
    let literal = matches!(kind, OptimizerKind::Adam(AdamConfig { variant: AdamVariant::Literal, .. }));
    let losses: Vec<f64> = if literal {
        // moments carry over from one candidate to the next
        let mut shared = AdamState::new(theta0.len());
        cands
            .iter()
            .enumerate()
            .map(|(j, &g)| {
                let mut s = candidate_stream(stream, round, j);
                run_candidate(problem, theta0, g, trial, kind, Some(&mut shared), &mut s)
            })
            .collect()
    } else {
        cands
            .par_iter()
            .enumerate()
            .map(|(j, &g)| {
                let mut s = candidate_stream(stream, round, j);
                run_candidate(problem, theta0, g, trial, kind, None, &mut s)
            })
            .collect()
    };

    let mut best = grid.center;
    let mut best_loss = f64::INFINITY;
    for (&g, &l) in cands.iter().zip(&losses) {
        if l < best_loss {
            best = g;
            best_loss = l;
        }
    }
    Ok(GridOutcome { best, trials: cands.into_iter().zip(losses).collect() })
}

pub fn find_lr_sgd<P: Problem>(
    problem: &P,
    theta0: &[f64],
    grid: &GridSpec,
    trial: &TrialSettings,
    stream: &RngStream,
    round: u64,
) -> Result<GridOutcome> {
    find_lr(problem, theta0, grid, trial, &OptimizerKind::Sgd, stream, round)
}

pub fn find_lr_adam<P: Problem>(
    problem: &P,
    theta0: &[f64],
    grid: &GridSpec,
    trial: &TrialSettings,
    adam: &AdamConfig,
    stream: &RngStream,
    round: u64,
) -> Result<GridOutcome> {
    find_lr(problem, theta0, grid, trial, &OptimizerKind::Adam(*adam), stream, round)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let g = GridSpec::new(5, 4.0, 1e-3).unwrap().candidates();
        let want = [6.25e-5, 2.5e-4, 1e-3, 4e-3, 1.6e-2];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() <= 1e-15 * b, "{a} vs {b}");
        }
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(GridSpec::new(1, 3.0, 0.2).unwrap().candidates(), vec![0.2]);
        let even = GridSpec::new(2, 4.0, 1.0).unwrap().candidates();
        assert!((even[0] - 0.5).abs() < 1e-15 && (even[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0, 4.0, 1.0).is_err());
        assert!(GridSpec::new(3, 1.0, 1.0).is_err());
        assert!(GridSpec::new(3, 2.0, 0.0).is_err());
    }
}
