//! Quadratic-loss testbed.
//!
//! The loss is `l(theta, x) = (c / 2) * |theta - x|^2` with gradient factor
//! `c`, so `grad l = c (theta - x)`. The three common scalings map as:
//!
//! | loss                 | grad_factor |
//! |----------------------|-------------|
//! | `|theta - x|^2`      | `2`         |
//! | `(p / 2) |theta - x|^2` | `p`      |
//! | `p |theta - x|^2`    | `2 p`       |
//!
//! All stability conditions below are stated in terms of the product
//! `c * gamma`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{axpy, dist_sq, norm, Vector};
use crate::rng::{tag, RngStream, StreamId};

/// Distribution of the data points `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataDist {
    /// Independent `Uniform[a, b]` coordinates.
    UniformBox { a: f64, b: f64 },
    /// Every draw equals this vector.
    PointMass(Vec<f64>),
}

impl Default for DataDist {
    fn default() -> Self {
        DataDist::UniformBox { a: 0.0, b: 1.0 }
    }
}

impl DataDist {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            DataDist::UniformBox { a, b } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return invalid(format!("uniform box needs finite a < b, got [{a}, {b}]"));
                }
                Ok(())
            }
            DataDist::PointMass(v) => check_dim(d, v.len()),
        }
    }

    pub fn sample_into(&self, stream: &mut RngStream, out: &mut [f64]) {
        match self {
            DataDist::UniformBox { a, b } => stream.fill_uniform(*a, *b, out),
            DataDist::PointMass(v) => out.copy_from_slice(v),
        }
    }

    /// Mean of `m` fresh draws, written into `out`.
    pub fn sample_mean_into(&self, stream: &mut RngStream, m: usize, out: &mut [f64]) {
        match self {
            DataDist::UniformBox { a, b } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for _ in 0..m {
                    for o in out.iter_mut() {
                        *o += stream.uniform(*a, *b);
                    }
                }
                let inv = 1.0 / m as f64;
                out.iter_mut().for_each(|o| *o *= inv);
            }
            DataDist::PointMass(v) => out.copy_from_slice(v),
        }
    }

    pub fn mean(&self, d: usize) -> Vector {
        match self {
            DataDist::UniformBox { a, b } => vec![0.5 * (a + b); d],
            DataDist::PointMass(v) => v.clone(),
        }
    }

    /// `sup |X|` over the support.
    pub fn sup_norm(&self, d: usize) -> f64 {
        match self {
            DataDist::UniformBox { a, b } => (d as f64).sqrt() * a.abs().max(b.abs()),
            DataDist::PointMass(v) => norm(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    pub d: usize,
    pub grad_factor: f64,
    #[serde(default)]
    pub data: DataDist,
}

impl QuadraticModel {
    pub fn new(d: usize, grad_factor: f64, data: DataDist) -> Result<Self> {
        let m = Self { d, grad_factor, data };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(d: usize, grad_factor: f64) -> Result<Self> {
        Self::new(d, grad_factor, DataDist::default())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("dimension must be at least 1");
        }
        if !(self.grad_factor > 0.0) || !self.grad_factor.is_finite() {
            return invalid(format!("grad_factor must be positive, got {}", self.grad_factor));
        }
        self.data.validate(self.d)
    }

    pub fn sample(&self, stream: &mut RngStream) -> Vector {
        let mut v = vec![0.0; self.d];
        self.data.sample_into(stream, &mut v);
        v
    }

    pub fn sample_batch(&self, stream: &mut RngStream, m: usize) -> Vec<Vector> {
        (0..m).map(|_| self.sample(stream)).collect()
    }

    pub fn data_mean(&self) -> Vector {
        self.data.mean(self.d)
    }

    pub fn data_sup_norm(&self) -> f64 {
        self.data.sup_norm(self.d)
    }
}

pub fn quad_loss(model: &QuadraticModel, theta: &[f64], x: &[f64]) -> Result<f64> {
    check_dim(model.d, theta.len())?;
    check_dim(model.d, x.len())?;
    Ok(0.5 * model.grad_factor * dist_sq(theta, x))
}

/// Batch-mean gradient `(c / M) * sum_m (theta - x_m)`.
pub fn quad_grad<V: AsRef<[f64]>>(model: &QuadraticModel, theta: &[f64], batch: &[V]) -> Result<Vector> {
    check_dim(model.d, theta.len())?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut g = vec![0.0; model.d];
    for x in batch {
        let x = x.as_ref();
        check_dim(model.d, x.len())?;
        for ((gi, ti), xi) in g.iter_mut().zip(theta).zip(x) {
            *gi += ti - xi;
        }
    }
    let s = model.grad_factor / batch.len() as f64;
    g.iter_mut().for_each(|gi| *gi *= s);
    Ok(g)
}

/// One SGD step on the quadratic loss with the batch-mean gradient.
pub fn quad_sgd_step<V: AsRef<[f64]>>(
    model: &QuadraticModel,
    theta: &[f64],
    gamma: f64,
    batch: &[V],
) -> Result<Vector> {
    if !(gamma >= 0.0) {
        return invalid(format!("learning rate must be nonnegative, got {gamma}"));
    }
    let g = quad_grad(model, theta, batch)?;
    let mut next = theta.to_vec();
    axpy(-gamma, &g, &mut next);
    Ok(next)
}

/// Same update written through a precomputed batch mean:
/// `theta <- (1 - c gamma) theta + c gamma * mean`.
fn step_towards_mean(model: &QuadraticModel, theta: &mut [f64], gamma: f64, mean: &[f64]) {
    let cg = model.grad_factor * gamma;
    for (t, m) in theta.iter_mut().zip(mean) {
        *t -= cg * (*t - m);
    }
}

/// State after `batch_means.len()` constant-rate steps, via the explicit
/// geometric-weight formula rather than by iterating.
pub fn closed_form_state<V: AsRef<[f64]>>(
    model: &QuadraticModel,
    theta0: &[f64],
    gamma: f64,
    batch_means: &[V],
) -> Result<Vector> {
    check_dim(model.d, theta0.len())?;
    let cg = model.grad_factor * gamma;
    if !(cg > 0.0 && cg < 2.0) {
        return invalid(format!("closed form needs c*gamma in (0, 2), got {cg}"));
    }
    let r = 1.0 - cg;
    let n = batch_means.len();
    let mut out: Vector = theta0.iter().map(|t| r.powi(n as i32) * t).collect();
    for (k, mu) in batch_means.iter().enumerate() {
        let mu = mu.as_ref();
        check_dim(model.d, mu.len())?;
        let w = r.powi((n - 1 - k) as i32) * cg;
        axpy(w, mu, &mut out);
    }
    Ok(out)
}

/// Upper bound on `|Theta_n|` for constant-rate SGD with `c gamma in (0, 2)`.
pub fn a_priori_bound(theta0_norm: f64, cg: f64, data_sup: f64) -> f64 {
    theta0_norm + 2.0 / (2.0 - cg) * data_sup
}

/// Bound on `sup_n |Theta_n|` for trajectories started at the invariant sample.
pub fn stationary_a_priori_bound(cg: f64, data_sup: f64) -> f64 {
    2.0 / (2.0 - cg) * data_sup
}

/// Smallest `K` with `(1 - cg)^K < 1e-8`.
pub fn default_truncation(cg: f64) -> usize {
    let r = (1.0 - cg).abs();
    if r == 0.0 {
        return 1;
    }
    ((1e-8f64).ln() / r.ln()).floor() as usize + 1
}

/// `|chi - chi_K| <= (1 - c gamma)^K * sup |X|`.
pub fn chi_truncation_bias(cg: f64, k: usize, data_sup: f64) -> f64 {
    (1.0 - cg).abs().powi(k as i32) * data_sup
}

fn check_chi_rate(cg: f64) -> Result<()> {
    if !(cg > 0.0 && cg <= 1.0) {
        return invalid(format!("invariant sampler needs c*gamma in (0, 1], got {cg}"));
    }
    Ok(())
}

/// Draw from the invariant law of constant-rate SGD, truncated after `k`
/// terms of the geometric series of past batch means.
pub fn sample_invariant_chi(
    model: &QuadraticModel,
    gamma: f64,
    m: usize,
    k: usize,
    stream: &mut RngStream,
) -> Result<Vector> {
    let cg = model.grad_factor * gamma;
    check_chi_rate(cg)?;
    if k == 0 || m == 0 {
        return invalid("truncation K and batch size M must be at least 1");
    }
    let mut chi = vec![0.0; model.d];
    let mut mean = vec![0.0; model.d];
    let mut w = cg;
    for _ in 0..k {
        model.data.sample_mean_into(stream, m, &mut mean);
        axpy(w, &mean, &mut chi);
        w *= 1.0 - cg;
    }
    Ok(chi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityReport {
    /// `max_i |mean(Theta_0)_i - mean(Theta_n)_i|`
    pub mean_gap: f64,
    /// `max_ij |cov(Theta_0)_ij - cov(Theta_n)_ij|`
    pub cov_gap: f64,
    /// Largest per-coordinate standard error of the mean gap.
    pub mean_se: f64,
    /// Largest per-entry standard error of the covariance gap.
    pub cov_se: f64,
    /// `(1 - c gamma)^K sup |X|`
    pub truncation_bias: f64,
}

impl StationarityReport {
    /// Both gaps within `z` standard errors, widened by the truncation bias.
    ///
    /// Started at `chi_K`, the state after `n` steps has the law of
    /// `chi_{K+n}`, which differs from `chi_K` by an independent tail of norm
    /// at most `b`. Means therefore move by at most `b` and covariance entries
    /// by at most `b^2`. A `1e-12` absolute slack absorbs float rounding.
    pub fn within(&self, z: f64) -> bool {
        let b = self.truncation_bias;
        self.mean_gap <= z * self.mean_se + b + 1e-12
            && self.cov_gap <= z * self.cov_se + b * b + 1e-12
    }
}

/// Start `n_samples` independent replicas at the invariant sample, run
/// `n_steps` constant-rate steps, and compare the empirical first and second
/// moments at the start and at the end.
#[allow(clippy::too_many_arguments)]
pub fn stationarity_check(
    model: &QuadraticModel,
    gamma: f64,
    m: usize,
    k: usize,
    n_steps: usize,
    n_samples: usize,
    stream: &RngStream,
) -> Result<StationarityReport> {
    let cg = model.grad_factor * gamma;
    if !(cg > 0.0 && cg < 1.0) {
        return invalid(format!("stationarity check needs c*gamma in (0, 1), got {cg}"));
    }
    if n_samples < 2 {
        return invalid("stationarity check needs at least 2 replicas");
    }
    let d = model.d;
    let pairs: Vec<(Vector, Vector)> = (0..n_samples)
        .into_par_iter()
        .map(|r| {
            let mut s = stream.child(StreamId::new(tag::REPLICA, r as u64, 0));
            let start = sample_invariant_chi(model, gamma, m, k, &mut s)?;
            let mut theta = start.clone();
            let mut mean = vec![0.0; d];
            for _ in 0..n_steps {
                model.data.sample_mean_into(&mut s, m, &mut mean);
                step_towards_mean(model, &mut theta, gamma, &mean);
            }
            Ok((start, theta))
        })
        .collect::<Result<_>>()?;

    let n = n_samples as f64;
    let mut m0 = vec![0.0; d];
    let mut m1 = vec![0.0; d];
    for (a, b) in &pairs {
        axpy(1.0 / n, a, &mut m0);
        axpy(1.0 / n, b, &mut m1);
    }

    let mut mean_gap = 0.0f64;
    let mut mean_se = 0.0f64;
    for i in 0..d {
        mean_gap = mean_gap.max((m0[i] - m1[i]).abs());
        let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a[i] - b[i]).collect();
        mean_se = mean_se.max(sample_sd(&diffs) / n.sqrt());
    }

    let mut cov_gap = 0.0f64;
    let mut cov_se = 0.0f64;
    for i in 0..d {
        for j in i..d {
            let w: Vec<f64> = pairs
                .iter()
                .map(|(a, b)| (a[i] - m0[i]) * (a[j] - m0[j]) - (b[i] - m1[i]) * (b[j] - m1[j]))
                .collect();
            let gap = w.iter().sum::<f64>() / (n - 1.0);
            cov_gap = cov_gap.max(gap.abs());
            cov_se = cov_se.max(sample_sd(&w) / n.sqrt());
        }
    }

    Ok(StationarityReport {
        mean_gap,
        cov_gap,
        mean_se,
        cov_se,
        truncation_bias: chi_truncation_bias(cg, k, model.data_sup_norm()),
    })
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Monte Carlo frequency of the event that one step from the invariant
/// sample moves strictly away from a fresh test-batch mean:
/// `|(1 - c gamma) chi + c gamma Y - Z| > |chi - Z|`.
///
/// The data distribution must be non-degenerate for the true probability to
/// be positive; that is the caller's obligation.
pub fn estimate_increase_probability(
    model: &QuadraticModel,
    gamma: f64,
    m: usize,
    m_test: usize,
    k: usize,
    n_samples: usize,
    stream: &RngStream,
) -> Result<f64> {
    let cg = model.grad_factor * gamma;
    if !(cg > 0.0 && cg < 1.0) {
        return invalid(format!("increase probability needs c*gamma in (0, 1), got {cg}"));
    }
    if n_samples == 0 || m_test == 0 {
        return invalid("n_samples and test batch size must be at least 1");
    }
    let d = model.d;
    let hits: usize = (0..n_samples)
        .into_par_iter()
        .map(|r| {
            let mut s = stream.child(StreamId::new(tag::REPLICA, r as u64, 0));
            let chi = sample_invariant_chi(model, gamma, m, k, &mut s)?;
            let mut y = vec![0.0; d];
            let mut z = vec![0.0; d];
            model.data.sample_mean_into(&mut s, m, &mut y);
            model.data.sample_mean_into(&mut s, m_test, &mut z);
            let mut moved = chi.clone();
            step_towards_mean(model, &mut moved, gamma, &y);
            Ok(usize::from(dist_sq(&moved, &z) > dist_sq(&chi, &z)))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    Ok(hits as f64 / n_samples as f64)
}

/// Run constant-rate SGD and return every step index `n` at which the summed
/// loss over `m_test` fresh test points is strictly larger at `Theta_n` than
/// at `Theta_{n-1}`.
pub fn count_increase_events(
    model: &QuadraticModel,
    gamma: f64,
    m: usize,
    m_test: usize,
    theta0: &[f64],
    n_steps: usize,
    stream: &RngStream,
) -> Result<Vec<usize>> {
    check_dim(model.d, theta0.len())?;
    let cg = model.grad_factor * gamma;
    if !(0.0..1.0).contains(&cg) {
        return invalid(format!("increase events need c*gamma in [0, 1), got {cg}"));
    }
    if m == 0 || m_test == 0 {
        return invalid("batch sizes must be at least 1");
    }
    let mut train = stream.child(StreamId::new(tag::TRAIN, 0, 0));
    let mut test = stream.child(StreamId::new(tag::TEST, 0, 0));
    let mut theta = theta0.to_vec();
    let mut mean = vec![0.0; model.d];
    let mut x = vec![0.0; model.d];
    let mut events = Vec::new();
    for n in 1..=n_steps {
        let prev = theta.clone();
        model.data.sample_mean_into(&mut train, m, &mut mean);
        step_towards_mean(model, &mut theta, gamma, &mean);
        let (mut before, mut after) = (0.0, 0.0);
        for _ in 0..m_test {
            model.data.sample_into(&mut test, &mut x);
            before += 0.5 * model.grad_factor * dist_sq(&prev, &x);
            after += 0.5 * model.grad_factor * dist_sq(&theta, &x);
        }
        if after > before {
            events.push(n);
        }
    }
    Ok(events)
}

/// Check `exp(-c x) <= 1 - x <= exp(-x)` at every grid point of
/// `[0, ln(c) / c]`, with exact float comparisons.
pub fn exp_bound_check(c: f64, grid: &[f64]) -> Result<bool> {
    if !(c >= 1.0) || !c.is_finite() {
        return invalid(format!("c must be at least 1, got {c}"));
    }
    let hi = c.ln() / c;
    if let Some(x) = grid.iter().find(|x| !(**x >= 0.0 && **x <= hi)) {
        return invalid(format!("grid point {x} outside [0, {hi}]"));
    }
    Ok(grid
        .iter()
        .all(|&x| (-c * x).exp() <= 1.0 - x && 1.0 - x <= (-x).exp()))
}

/// Check `exp(x) <= 1 / (1 - x) <= exp(e x)` at every grid point of `[0, 1/e]`.
pub fn inverse_bound_check(grid: &[f64]) -> Result<bool> {
    let hi = (-1.0f64).exp();
    if let Some(x) = grid.iter().find(|x| !(**x >= 0.0 && **x <= hi)) {
        return invalid(format!("grid point {x} outside [0, {hi}]"));
    }
    let e = std::f64::consts::E;
    Ok(grid
        .iter()
        .all(|&x| x.exp() <= 1.0 / (1.0 - x) && 1.0 / (1.0 - x) <= (e * x).exp()))
}

/// `n` equispaced points covering `[lo, hi]` including both endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Decreasing ladder of admissible learning rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuSequence {
    /// `nu_k = nu1 / k`
    Harmonic { nu1: f64 },
    /// Strictly decreasing positive table. Divergence of the partial sums
    /// cannot be checked on a finite table.
    Table(Vec<f64>),
}

impl NuSequence {
    pub fn harmonic(nu1: f64) -> Result<Self> {
        let s = NuSequence::Harmonic { nu1 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NuSequence::Harmonic { nu1 } => {
                if !(*nu1 > 0.0) || !nu1.is_finite() {
                    return invalid(format!("nu1 must be positive, got {nu1}"));
                }
            }
            NuSequence::Table(t) => {
                if t.is_empty() {
                    return invalid("nu table is empty");
                }
                if t.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return invalid("nu table entries must be positive");
                }
                if t.windows(2).any(|w| !(w[1] < w[0])) {
                    return invalid("nu table must be strictly decreasing");
                }
            }
        }
        Ok(())
    }

    pub fn first(&self) -> f64 {
        match self {
            NuSequence::Harmonic { nu1 } => *nu1,
            NuSequence::Table(t) => t[0],
        }
    }

    /// `nu_k` for `k >= 1`; `None` past the end of a table.
    pub fn value(&self, k: usize) -> Option<f64> {
        match self {
            NuSequence::Harmonic { nu1 } => (k >= 1).then(|| nu1 / k as f64),
            NuSequence::Table(t) => k.checked_sub(1).and_then(|i| t.get(i).copied()),
        }
    }

    /// Largest `nu_k` strictly below `gamma`, with its index.
    pub fn next_below(&self, gamma: f64) -> Result<(usize, f64)> {
        match self {
            NuSequence::Harmonic { nu1 } => {
                if !(gamma > 0.0) {
                    return Err(Error::LadderExhausted(gamma));
                }
                let mut k = (nu1 / gamma).floor() as usize + 1;
                while k > 1 && nu1 / ((k - 1) as f64) < gamma {
                    k -= 1;
                }
                while nu1 / k as f64 >= gamma {
                    k += 1;
                }
                Ok((k, nu1 / k as f64))
            }
            NuSequence::Table(t) => t
                .iter()
                .position(|v| *v < gamma)
                .map(|i| (i + 1, t[i]))
                .ok_or(Error::LadderExhausted(gamma)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(a: u64) -> RngStream {
        RngStream::new(11, StreamId::new(tag::USER, a, 0))
    }

    #[test]
    fn loss_values() {
        let m2 = QuadraticModel::uniform(2, 2.0).unwrap();
        assert_eq!(quad_loss(&m2, &[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(quad_loss(&m2, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let m1 = QuadraticModel::uniform(2, 1.0).unwrap();
        assert_eq!(quad_loss(&m1, &[3.0, 4.0], &[0.0, 0.0]).unwrap(), 12.5);
        assert!(quad_loss(&m1, &[3.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(QuadraticModel::uniform(0, 1.0).is_err());
        assert!(QuadraticModel::uniform(1, 0.0).is_err());
        assert!(QuadraticModel::new(2, 1.0, DataDist::PointMass(vec![1.0])).is_err());
        assert!(QuadraticModel::new(1, 1.0, DataDist::UniformBox { a: 1.0, b: 0.0 }).is_err());
    }

    #[test]
    fn sgd_step_examples() {
        let m = QuadraticModel::uniform(1, 1.0).unwrap();
        let zeros = vec![vec![0.0]; 3];
        let mut th = vec![1.0];
        for _ in 0..3 {
            th = quad_sgd_step(&m, &th, 0.5, &zeros).unwrap();
        }
        assert_eq!(th, vec![0.125]);

        assert_eq!(quad_sgd_step(&m, &[0.7], 0.0, &[vec![5.0]]).unwrap(), vec![0.7]);

        let batch = vec![vec![1.0], vec![3.0]];
        assert_eq!(quad_sgd_step(&m, &[0.0], 0.5, &batch).unwrap(), vec![1.0]);

        assert_eq!(
            quad_sgd_step::<Vec<f64>>(&m, &[0.0], 0.5, &[]),
            Err(Error::EmptyBatch)
        );
    }

    #[test]
    fn gradient_form_equals_mean_form() {
        let m = QuadraticModel::uniform(3, 1.7).unwrap();
        let mut s = stream(1);
        let theta = m.sample(&mut s);
        let batch = m.sample_batch(&mut s, 5);
        let via_grad = quad_sgd_step(&m, &theta, 0.3, &batch).unwrap();
        let mean = crate::linalg::mean_of(&batch).unwrap();
        let cg = 1.7 * 0.3;
        for i in 0..3 {
            let direct = (1.0 - cg) * theta[i] + cg * mean[i];
            assert!((via_grad[i] - direct).abs() <= 1e-15 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn closed_form_examples() {
        let m = QuadraticModel::uniform(2, 1.0).unwrap();
        let th0 = vec![0.2, -0.4];
        assert_eq!(closed_form_state::<Vec<f64>>(&m, &th0, 0.5, &[]).unwrap(), th0);
        let mu = vec![vec![0.7, 0.1]; 200];
        let far = closed_form_state(&m, &[0.0, 0.0], 0.5, &mu).unwrap();
        assert!((far[0] - 0.7).abs() < 1e-12 && (far[1] - 0.1).abs() < 1e-12);
        assert!(closed_form_state(&m, &th0, 2.0, &mu).is_err());
        assert!(closed_form_state(&m, &th0, 0.0, &mu).is_err());
    }

    #[test]
    fn closed_form_matches_50_iterations() {
        let m = QuadraticModel::uniform(3, 1.3).unwrap();
        let mut s = stream(2);
        let gamma = 1.1;
        let th0 = m.sample(&mut s);
        let mut th = th0.clone();
        let mut means = Vec::new();
        for _ in 0..50 {
            let b = m.sample_batch(&mut s, 4);
            means.push(crate::linalg::mean_of(&b).unwrap());
            th = quad_sgd_step(&m, &th, gamma, &b).unwrap();
        }
        let cf = closed_form_state(&m, &th0, gamma, &means).unwrap();
        for (a, b) in th.iter().zip(&cf) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn chi_examples() {
        let v = vec![0.25, 0.75];
        let pm = QuadraticModel::new(2, 1.0, DataDist::PointMass(v.clone())).unwrap();
        let k = 7;
        let chi = sample_invariant_chi(&pm, 0.3, 4, k, &mut stream(3)).unwrap();
        let w = 1.0 - 0.7f64.powi(k as i32);
        for (c, x) in chi.iter().zip(&v) {
            assert!((c - w * x).abs() < 1e-15);
        }

        // K = 1 reduces to c gamma times one batch mean
        let m = QuadraticModel::uniform(2, 1.0).unwrap();
        let chi1 = sample_invariant_chi(&m, 0.5, 3, 1, &mut stream(4)).unwrap();
        let mut s = stream(4);
        let b = m.sample_batch(&mut s, 3);
        let mean = crate::linalg::mean_of(&b).unwrap();
        for (c, x) in chi1.iter().zip(&mean) {
            assert!((c - 0.5 * x).abs() < 1e-15);
        }

        assert!(sample_invariant_chi(&m, 1.5, 3, 5, &mut stream(4)).is_err());
        assert!(sample_invariant_chi(&m, 0.0, 3, 5, &mut stream(4)).is_err());
        assert!(sample_invariant_chi(&m, 1.0, 3, 5, &mut stream(4)).is_ok());
    }

    #[test]
    fn chi_mean_matches_data_mean() {
        // sd of chi for U[0,1], cg = 0.5, M = 1 is sqrt(cg/(2-cg)/12) ~ 0.167;
        // 3 sd of the mean over 1e5 draws ~ 1.6e-3
        let m = QuadraticModel::uniform(1, 1.0).unwrap();
        let n = 100_000;
        let mut s = stream(5);
        let mean: f64 = (0..n)
            .map(|_| sample_invariant_chi(&m, 0.5, 1, 100, &mut s).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 3.0 * (0.5f64 / 1.5 / 12.0).sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn default_truncation_reaches_1e8() {
        for cg in [0.1, 0.5, 0.8, 1.0, 1.5] {
            let k = default_truncation(cg);
            assert!((1.0 - cg).abs().powi(k as i32) < 1e-8, "cg {cg}");
        }
    }

    #[test]
    fn stationarity_zero_steps() {
        let m = QuadraticModel::uniform(2, 1.0).unwrap();
        let r = stationarity_check(&m, 0.5, 4, 50, 0, 200, &stream(6)).unwrap();
        assert_eq!(r.mean_gap, 0.0);
        assert_eq!(r.cov_gap, 0.0);
    }

    #[test]
    fn stationarity_point_mass() {
        let pm = QuadraticModel::new(2, 1.0, DataDist::PointMass(vec![0.3, -0.8])).unwrap();
        let r = stationarity_check(&pm, 0.5, 4, 200, 10, 100, &stream(7)).unwrap();
        assert!(r.mean_gap < 1e-12 && r.cov_gap < 1e-12, "{r:?}");
        assert!(r.within(4.0));
    }

    #[test]
    fn increase_probability_point_mass_is_zero() {
        let pm = QuadraticModel::new(1, 1.0, DataDist::PointMass(vec![0.4])).unwrap();
        let p = estimate_increase_probability(&pm, 0.5, 4, 4, 200, 1000, &stream(8)).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn increase_probability_in_unit_interval() {
        let m = QuadraticModel::uniform(1, 1.0).unwrap();
        let p = estimate_increase_probability(&m, 0.5, 4, 4, 50, 2000, &stream(9)).unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(p > 0.0);
    }

    #[test]
    fn no_events_without_movement() {
        let m = QuadraticModel::uniform(2, 1.0).unwrap();
        let ev = count_increase_events(&m, 0.0, 8, 8, &[0.1, 0.2], 500, &stream(10)).unwrap();
        assert!(ev.is_empty());

        let v = vec![0.6, 0.1];
        let pm = QuadraticModel::new(2, 1.0, DataDist::PointMass(v.clone())).unwrap();
        let ev = count_increase_events(&pm, 0.5, 8, 8, &v, 500, &stream(10)).unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn exp_bound_examples() {
        assert!(exp_bound_check(2.0, &[0.0]).unwrap());
        // exp(-0.5) = 0.6065 <= 0.75 <= exp(-0.25) = 0.7788
        assert!(exp_bound_check(2.0, &[0.25]).unwrap());
        assert!(exp_bound_check(2.0, &[2f64.ln() / 2.0]).unwrap());
        assert!(exp_bound_check(2.0, &[0.5]).is_err());
        assert!(exp_bound_check(0.5, &[0.0]).is_err());
        assert!(inverse_bound_check(&linspace(0.0, (-1.0f64).exp(), 1000)).unwrap());
        assert!(inverse_bound_check(&[0.5]).is_err());
    }

    #[test]
    fn exp_bound_grids() {
        for c in [1.0, 1.5, 2.0, 10.0] {
            let g = linspace(0.0, f64::ln(c) / c, 1000);
            assert!(exp_bound_check(c, &g).unwrap(), "c = {c}");
        }
    }

    #[test]
    fn harmonic_ladder() {
        let nu = NuSequence::harmonic(0.1).unwrap();
        let (k, v) = nu.next_below(0.035).unwrap();
        assert_eq!(k, 3);
        assert_eq!(v, 0.1 / 3.0);
        assert_eq!(nu.next_below(0.1).unwrap(), (2, 0.05));
        assert_eq!(nu.next_below(0.05).unwrap(), (3, 0.1 / 3.0));
        assert_eq!(nu.next_below(1.0).unwrap(), (1, 0.1));
        let mut g = nu.first();
        for k in 2..2000 {
            let (j, v) = nu.next_below(g).unwrap();
            assert_eq!(j, k);
            g = v;
        }
    }

    #[test]
    fn table_ladder() {
        let t = NuSequence::Table(vec![0.4, 0.2, 0.1]);
        t.validate().unwrap();
        assert_eq!(t.next_below(0.3).unwrap(), (2, 0.2));
        assert_eq!(t.next_below(0.1), Err(Error::LadderExhausted(0.1)));
        assert!(NuSequence::Table(vec![0.4, 0.4]).validate().is_err());
        assert!(NuSequence::Table(vec![]).validate().is_err());
        assert!(NuSequence::harmonic(0.0).is_err());
    }
}
