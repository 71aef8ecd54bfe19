use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{dist_sq, Vector};
use crate::optim::{Problem, Theorem1Sgd};
use crate::quadratic::{NuSequence, QuadraticModel};
use crate::rng::{tag, RngStream, StreamId};

/// Mean squared distance of `Theta_{N_t}` to the data mean, sampled at a set
/// of clock times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticExperiment {
    pub model: QuadraticModel,
    pub nu: NuSequence,
    pub batch: usize,
    pub test_batch: usize,
    /// Per-seed step budget. A seed whose clock has not reached the largest
    /// probe within the budget fails with `HorizonNotReached`.
    pub max_steps: u64,
    pub probes: Vec<f64>,
    /// Starting point; the origin when absent.
    #[serde(default)]
    pub theta0: Option<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub probes: Vec<f64>,
    /// Mean over seeds, one entry per probe.
    pub mean: Vec<f64>,
    /// `per_seed[s][j]` is the squared distance of seed `s` at probe `j`.
    pub per_seed: Vec<Vec<f64>>,
    /// Steps each seed needed to reach the largest probe.
    pub steps: Vec<u64>,
}

impl QuadraticExperiment {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.nu.validate()?;
        if let Some(t) = &self.theta0 {
            check_dim(self.model.d, t.len())?;
        }
        if self.probes.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return invalid("probe times must be finite and nonnegative");
        }
        Ok(())
    }

    fn start(&self) -> Vector {
        self.theta0.clone().unwrap_or_else(|| vec![0.0; self.model.d])
    }
}

/// Squared distance to the data mean at each probe for one seed, plus the
/// number of steps taken.
fn run_seed(exp: &QuadraticExperiment, stream: &RngStream, mean: &[f64]) -> Result<(Vec<f64>, u64)> {
    let theta0 = exp.start();
    let mut sgd = Theorem1Sgd::new(&exp.model, &theta0, &exp.nu, exp.batch, exp.test_batch, stream)?;
    let mut order: Vec<usize> = (0..exp.probes.len()).collect();
    order.sort_by(|&a, &b| exp.probes[a].total_cmp(&exp.probes[b]));

    let mut out = vec![0.0; exp.probes.len()];
    let mut next = 0;
    let mut clock = 0.0_f64;
    loop {
        while next < order.len() && exp.probes[order[next]] <= clock {
            out[order[next]] = dist_sq(sgd.theta(), mean);
            next += 1;
        }
        if next == order.len() {
            return Ok((out, sgd.steps_taken()));
        }
        if sgd.steps_taken() >= exp.max_steps {
            return Err(Error::HorizonNotReached { requested: exp.probes[order[next]], reached: clock });
        }
        sgd.step()?;
        clock = clock.max(sgd.clock());
    }
}

/// Runs `n_seeds` independent seeds in parallel. Seed `s` draws from
/// `stream.child((SEED, s, 0))`.
pub fn run_quadratic_convergence(
    exp: &QuadraticExperiment,
    n_seeds: usize,
    stream: &RngStream,
) -> Result<ConvergenceTable> {
    exp.validate()?;
    if n_seeds == 0 {
        return invalid("need at least one seed");
    }
    let mean = exp.model.data_mean();
    let runs = (0..n_seeds)
        .into_par_iter()
        .map(|s| run_seed(exp, &stream.child(StreamId::new(tag::SEED, s as u64, 0)), &mean))
        .collect::<Result<Vec<_>>>()?;

    let mut avg = vec![0.0; exp.probes.len()];
    for (r, _) in &runs {
        for (a, v) in avg.iter_mut().zip(r) {
            *a += v;
        }
    }
    avg.iter_mut().for_each(|a| *a /= n_seeds as f64);
    let (per_seed, steps) = runs.into_iter().unzip();
    Ok(ConvergenceTable { probes: exp.probes.clone(), mean: avg, per_seed, steps })
}

/// Row-major `m x d` block of data points.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBatch {
    pub points: Vector,
}

impl Problem for QuadraticModel {
    type Batch = QuadraticBatch;

    fn param_dim(&self) -> usize {
        self.d
    }

    fn sample_batch(&self, stream: &mut RngStream, size: usize) -> QuadraticBatch {
        let mut points = vec![0.0; size * self.d];
        for x in points.chunks_exact_mut(self.d) {
            self.data.sample_into(stream, x);
        }
        QuadraticBatch { points }
    }

    fn loss_and_grad(&self, theta: &[f64], batch: &QuadraticBatch) -> (f64, Vector) {
        let n = batch.points.len() / self.d;
        let mut g = vec![0.0; self.d];
        let mut l = 0.0;
        for x in batch.points.chunks_exact(self.d) {
            l += dist_sq(theta, x);
            for ((gi, t), xi) in g.iter_mut().zip(theta).zip(x) {
                *gi += t - xi;
            }
        }
        let s = self.grad_factor / n as f64;
        g.iter_mut().for_each(|gi| *gi *= s);
        (0.5 * s * l, g)
    }

    fn loss(&self, theta: &[f64], batch: &QuadraticBatch) -> f64 {
        let n = batch.points.len() / self.d;
        let l: f64 = batch.points.chunks_exact(self.d).map(|x| dist_sq(theta, x)).sum();
        0.5 * (self.grad_factor / n as f64) * l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::DataDist;

    fn exp(model: QuadraticModel, theta0: Option<Vector>, probes: Vec<f64>) -> QuadraticExperiment {
        QuadraticExperiment {
            model,
            nu: NuSequence::harmonic(0.4).unwrap(),
            batch: 4,
            test_batch: 4,
            max_steps: 10_000,
            probes,
            theta0,
        }
    }

    fn root() -> RngStream {
        RngStream::new(5, StreamId::new(tag::USER, 0, 0))
    }

    #[test]
    fn point_mass_at_start_stays_zero() {
        let mu = vec![0.2, 0.7];
        let m = QuadraticModel::new(2, 2.0, DataDist::PointMass(mu.clone())).unwrap();
        let t = run_quadratic_convergence(&exp(m, Some(mu), vec![0.0, 1.0, 2.0]), 4, &root()).unwrap();
        assert_eq!(t.mean, vec![0.0; 3]);
    }

    #[test]
    fn zero_probe_is_initial_distance() {
        let m = QuadraticModel::uniform(2, 2.0).unwrap();
        let t = run_quadratic_convergence(&exp(m, Some(vec![1.0, -1.0]), vec![0.0]), 3, &root()).unwrap();
        assert_eq!(t.mean, vec![0.25 + 2.25]);
        assert_eq!(t.steps, vec![0; 3]);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let m = QuadraticModel::uniform(2, 2.0).unwrap();
        let mut e = exp(m, None, vec![1e6]);
        e.max_steps = 50;
        assert!(matches!(
            run_quadratic_convergence(&e, 1, &root()),
            Err(Error::HorizonNotReached { .. })
        ));
    }

    #[test]
    fn problem_gradient_matches_difference() {
        let m = QuadraticModel::uniform(3, 1.5).unwrap();
        let b = Problem::sample_batch(&m, &mut root(), 7);
        let th = [0.1, 0.9, -0.3];
        let (l, g) = m.loss_and_grad(&th, &b);
        assert_eq!(l, m.loss(&th, &b));
        for i in 0..3 {
            let (mut p, mut q) = (th, th);
            p[i] += 1e-6;
            q[i] -= 1e-6;
            assert!(((m.loss(&p, &b) - m.loss(&q, &b)) / 2e-6 - g[i]).abs() < 1e-7);
        }
    }
}
