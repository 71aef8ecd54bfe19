//! Constant-then-lowered learning rates on the quadratic problem.
//!
//! The rate starts at the top of the ladder. After each step, the summed loss
//! over fresh test points is compared at the new and the previous parameters;
//! a strict increase drops the rate to the largest ladder value strictly below
//! it, otherwise the rate is kept.

use super::clock::{CompensatedSum, NtClock};
use super::dynamic::{Event, TraceRecord};
use crate::error::{check_dim, invalid, Result};
use crate::linalg::{dist_sq, Vector};
use crate::quadratic::{NuSequence, QuadraticModel};
use crate::rng::{tag, RngStream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Step {
    pub step: u64,
    /// Mean batch loss at the pre-update parameters.
    pub train_loss: f64,
    /// Mean test loss at the post-update parameters.
    pub test_loss: f64,
    /// Rate used by this step.
    pub lr: f64,
    pub clock: f64,
    /// The test loss increased, so the next rate is lower.
    pub increased: bool,
}

/// Step-at-a-time driver, for callers that only need a few observations of a
/// long run.
#[derive(Debug, Clone)]
pub struct Theorem1Sgd<'a> {
    model: &'a QuadraticModel,
    nu: &'a NuSequence,
    batch: usize,
    test_batch: usize,
    theta: Vector,
    gamma: f64,
    step: u64,
    clock: CompensatedSum,
    train: RngStream,
    test: RngStream,
    mean: Vector,
    x: Vector,
}

impl<'a> Theorem1Sgd<'a> {
    pub fn new(
        model: &'a QuadraticModel,
        theta0: &[f64],
        nu: &'a NuSequence,
        batch: usize,
        test_batch: usize,
        stream: &RngStream,
    ) -> Result<Self> {
        model.validate()?;
        nu.validate()?;
        check_dim(model.d, theta0.len())?;
        if batch == 0 || test_batch == 0 {
            return invalid("batch sizes must be at least 1");
        }
        let gamma = nu.first();
        if !(model.grad_factor * gamma < 2.0) {
            return invalid(format!(
                "first ladder value must satisfy c * nu1 < 2, got {}",
                model.grad_factor * gamma
            ));
        }
        Ok(Self {
            model,
            nu,
            batch,
            test_batch,
            theta: theta0.to_vec(),
            gamma,
            step: 0,
            clock: CompensatedSum::default(),
            train: stream.child(StreamId::new(tag::TRAIN, 0, 0)),
            test: stream.child(StreamId::new(tag::TEST, 0, 0)),
            mean: vec![0.0; model.d],
            x: vec![0.0; model.d],
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Rate the next step will use.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn clock(&self) -> f64 {
        self.clock.value()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self) -> Result<Theorem1Step> {
        let half_c = 0.5 * self.model.grad_factor;
        let cg = self.model.grad_factor * self.gamma;

        // batch loss at the current parameters, then the update
        let mut train_loss = 0.0;
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        for _ in 0..self.batch {
            self.model.data.sample_into(&mut self.train, &mut self.x);
            train_loss += half_c * dist_sq(&self.theta, &self.x);
            for (m, x) in self.mean.iter_mut().zip(&self.x) {
                *m += x;
            }
        }
        let inv = 1.0 / self.batch as f64;
        train_loss *= inv;
        let prev = self.theta.clone();
        for (t, m) in self.theta.iter_mut().zip(&self.mean) {
            *t -= cg * (*t - m * inv);
        }

        let (mut before, mut after) = (0.0, 0.0);
        for _ in 0..self.test_batch {
            self.model.data.sample_into(&mut self.test, &mut self.x);
            before += half_c * dist_sq(&prev, &self.x);
            after += half_c * dist_sq(&self.theta, &self.x);
        }

        self.step += 1;
        let used = self.gamma;
        self.clock.add(used);
        let increased = after > before;
        if increased {
            self.gamma = self.nu.next_below(self.gamma)?.1;
        }
        Ok(Theorem1Step {
            step: self.step,
            train_loss,
            test_loss: after / self.test_batch as f64,
            lr: used,
            clock: self.clock.value(),
            increased,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Outcome {
    /// `Theta_0, ..., Theta_T`
    pub states: Vec<Vector>,
    /// `gamma_1, ..., gamma_T`
    pub gammas: Vec<f64>,
    pub clock: NtClock,
    /// Steps whose test loss strictly increased.
    pub events: Vec<usize>,
    pub trace: Vec<TraceRecord>,
}

impl Theorem1Outcome {
    /// `Theta_{N_t}`
    pub fn state_at_time(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.states[self.clock.lookup(t)?])
    }
}

/// Run `steps` steps of the adaptive rule and keep the whole trajectory.
#[allow(clippy::too_many_arguments)]
pub fn train_theorem1(
    model: &QuadraticModel,
    theta0: &[f64],
    nu: &NuSequence,
    batch: usize,
    test_batch: usize,
    steps: usize,
    stream: &RngStream,
) -> Result<Theorem1Outcome> {
    let mut sgd = Theorem1Sgd::new(model, theta0, nu, batch, test_batch, stream)?;
    let mut out = Theorem1Outcome {
        states: vec![theta0.to_vec()],
        gammas: Vec::with_capacity(steps),
        clock: NtClock::new(),
        events: Vec::new(),
        trace: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let s = sgd.step()?;
        out.states.push(sgd.theta().to_vec());
        out.gammas.push(s.lr);
        out.clock.push(s.lr)?;
        if s.increased {
            out.events.push(s.step as usize);
        }
        out.trace.push(TraceRecord {
            step: s.step,
            train_loss: s.train_loss,
            test_loss: Some(s.test_loss),
            lr: s.lr,
            clock: s.clock,
            event: if s.increased { Event::LrDecrease } else { Event::None },
            stall: 0,
        });
    }
    Ok(out)
}
