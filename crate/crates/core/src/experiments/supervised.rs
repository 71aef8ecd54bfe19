//! Regression of a one-hidden-layer ReLU network onto the cubic target
//! `f(x) = 1 + sum_i (d + 1 - 2i) x_i^3` on `[-1, 1]^d`.

use super::regression::{LabelledSampler, MlpBatch, MlpRegression};
use crate::error::{check_dim, Result};
use crate::network::{mlp_init, MlpArch};
use crate::optim::{train_constant, train_dynamic, AdaptiveTrainerConfig, Evaluation, Problem, TrainOutcome};
use crate::rng::{tag, RngStream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupervisedTarget {
    pub d: usize,
}

impl Default for SupervisedTarget {
    fn default() -> Self {
        Self { d: 6 }
    }
}

fn cubic(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    1.0 + x
        .iter()
        .enumerate()
        .map(|(i, xi)| (d - 1.0 - 2.0 * i as f64) * xi * xi * xi)
        .sum::<f64>()
}

pub fn target_eval(target: &SupervisedTarget, x: &[f64]) -> Result<f64> {
    check_dim(target.d, x.len())?;
    Ok(cubic(x))
}

impl LabelledSampler for SupervisedTarget {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn sample(&self, stream: &mut RngStream, x: &mut [f64]) -> f64 {
        stream.fill_uniform(-1.0, 1.0, x);
        cubic(x)
    }
}

#[derive(Debug, Clone)]
pub struct SupervisedRun {
    pub outcome: TrainOutcome,
    pub initial_test_loss: f64,
    pub final_test_loss: f64,
}

#[derive(Debug, Clone)]
pub struct PairedRun {
    pub adaptive: SupervisedRun,
    pub constant: SupervisedRun,
}

/// Size of the held-out set scoring the trained network.
pub const HELD_OUT: usize = 2000;

struct Setup {
    problem: MlpRegression<SupervisedTarget>,
    theta0: Vec<f64>,
    held_out: MlpBatch,
}

fn setup(arch: &MlpArch, stream: &RngStream) -> Result<Setup> {
    let problem = MlpRegression::new(arch.clone(), SupervisedTarget { d: arch.input_dim() })?;
    let theta0 = mlp_init(arch, &mut stream.child(StreamId::new(tag::INIT, 0, 0)))?.into_flat();
    let held_out = problem.sample_batch(&mut stream.child(StreamId::new(tag::EVAL, 0, 0)), HELD_OUT);
    Ok(Setup { problem, theta0, held_out })
}

fn finish(s: &Setup, outcome: TrainOutcome) -> SupervisedRun {
    SupervisedRun {
        initial_test_loss: s.problem.loss(&s.theta0, &s.held_out),
        final_test_loss: s.problem.loss(&outcome.theta, &s.held_out),
        outcome,
    }
}

/// Adaptive training on the cubic target. The held-out loss is recorded
/// every `eval_every` steps.
pub fn run_supervised(
    config: &AdaptiveTrainerConfig,
    arch: &MlpArch,
    stream: &RngStream,
    eval_every: usize,
) -> Result<SupervisedRun> {
    let s = setup(arch, stream)?;
    let f = |th: &[f64]| s.problem.loss(th, &s.held_out);
    let eval = Evaluation { every: eval_every, f: &f };
    let out = train_dynamic(&s.problem, &s.theta0, config, stream, Some(eval))?;
    Ok(finish(&s, out))
}

/// Adaptive run and a constant-rate (`gamma0`) run from the same
/// initialization on the same training batches.
pub fn run_supervised_pair(
    config: &AdaptiveTrainerConfig,
    arch: &MlpArch,
    stream: &RngStream,
    eval_every: usize,
) -> Result<PairedRun> {
    let s = setup(arch, stream)?;
    let f = |th: &[f64]| s.problem.loss(th, &s.held_out);
    let eval = Evaluation { every: eval_every, f: &f };
    let adaptive = train_dynamic(&s.problem, &s.theta0, config, stream, Some(eval))?;
    let constant = train_constant(&s.problem, &s.theta0, config, stream, Some(eval))?;
    Ok(PairedRun { adaptive: finish(&s, adaptive), constant: finish(&s, constant) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_examples() {
        let t = SupervisedTarget::default();
        assert_eq!(target_eval(&t, &[0.0; 6]).unwrap(), 1.0);
        assert_eq!(target_eval(&t, &[1.0; 6]).unwrap(), 1.0);
        assert_eq!(target_eval(&t, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 6.0);
        assert!(target_eval(&t, &[0.0; 5]).is_err());
    }
}
