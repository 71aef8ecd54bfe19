//! Deep Kolmogorov regression for the heat equation `u_t = Laplace u`,
//! `u(0, x) = |x|^2`.
//!
//! For `xi ~ U([-1, 1]^d)` and `Z ~ N(0, I_d)` the label
//! `y = |xi + sqrt(2T) Z|^2` satisfies `E[y | xi] = u(T, xi)`, so the MSE
//! minimizer over functions of `xi` is the solution at time `T`. Each input
//! gets one terminal sample.

use super::metrics::{relative_l2_error, BoxDomain};
use super::regression::{LabelledSampler, MlpRegression};
use crate::error::{invalid, Result};
use crate::linalg::norm_sq;
use crate::network::{mlp_init, MlpArch};
use crate::optim::{train_dynamic, AdaptiveTrainerConfig, TrainOutcome};
use crate::rng::{tag, RngStream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DkmHeatProblem {
    pub d: usize,
    /// PDE time horizon.
    pub t: f64,
}

impl DkmHeatProblem {
    pub fn new(d: usize, t: f64) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if !(t >= 0.0) || !t.is_finite() {
            return invalid(format!("time horizon must be nonnegative, got {t}"));
        }
        Ok(Self { d, t })
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain { d: self.d, lo: -1.0, hi: 1.0 }
    }
}

impl LabelledSampler for DkmHeatProblem {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn sample(&self, stream: &mut RngStream, x: &mut [f64]) -> f64 {
        stream.fill_uniform(-1.0, 1.0, x);
        let s = (2.0 * self.t).sqrt();
        x.iter().map(|xi| (xi + s * stream.std_normal()).powi(2)).sum()
    }
}

/// `u(T, x) = |x|^2 + 2 d T`
pub fn heat_exact(d: usize, t: f64, x: &[f64]) -> f64 {
    norm_sq(x) + 2.0 * d as f64 * t
}

/// Monte Carlo mean of `|x + sqrt(2T) Z|^2`.
pub fn dkm_label_mean_check(d: usize, t: f64, x: &[f64], n_mc: usize, stream: &mut RngStream) -> Result<f64> {
    crate::error::check_dim(d, x.len())?;
    if n_mc == 0 {
        return invalid("n_mc must be at least 1");
    }
    let s = (2.0 * t).sqrt();
    let mut total = 0.0;
    for _ in 0..n_mc {
        total += x.iter().map(|xi| (xi + s * stream.std_normal()).powi(2)).sum::<f64>();
    }
    Ok(total / n_mc as f64)
}

#[derive(Debug, Clone)]
pub struct DkmRun {
    pub outcome: TrainOutcome,
    pub relative_l2: f64,
}

pub fn run_dkm_heat(
    problem: DkmHeatProblem,
    config: &AdaptiveTrainerConfig,
    arch: &MlpArch,
    stream: &RngStream,
    n_mc: usize,
) -> Result<DkmRun> {
    let reg = MlpRegression::new(arch.clone(), problem)?;
    let theta0 = mlp_init(arch, &mut stream.child(StreamId::new(tag::INIT, 0, 0)))?.into_flat();
    let outcome = train_dynamic(&reg, &theta0, config, stream, None)?;
    let relative_l2 = relative_l2_error(
        |x| reg.predict(&outcome.theta, x),
        |x| heat_exact(problem.d, problem.t, x),
        problem.domain(),
        n_mc,
        &mut stream.child(StreamId::new(tag::EVAL, 0, 0)),
    )?;
    Ok(DkmRun { outcome, relative_l2 })
}
