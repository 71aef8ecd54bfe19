//! Numerical checks of the quadratic-testbed properties, run as one suite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadratic::{
    count_increase_events, estimate_increase_probability, exp_bound_check, inverse_bound_check, linspace,
    stationarity_check, QuadraticModel,
};
use crate::rng::{tag, RngStream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheorySizes {
    pub increase_samples: usize,
    pub stationarity_replicas: usize,
    pub event_seeds: usize,
    pub event_steps: usize,
    pub grid_points: usize,
}

impl Default for TheorySizes {
    fn default() -> Self {
        Self {
            increase_samples: 1_000_000,
            stationarity_replicas: 100_000,
            event_seeds: 100,
            event_steps: 10_000,
            grid_points: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    /// Pass boundary for `value`. How it is compared depends on the check.
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, value: f64, threshold: f64, pass: bool) -> Self {
        Self { name: name.into(), value, threshold, pass }
    }
}

/// Run every check. Check `k` draws from `stream.child((THEORY, k, 0))`.
pub fn theory_checks(sizes: &TheorySizes, stream: &RngStream) -> Result<Vec<CheckResult>> {
    let sub = |k: u64| stream.child(StreamId::new(tag::THEORY, k, 0));
    let mut out = Vec::new();

    for c in [1.0, 1.5, 2.0, 10.0] {
        let grid = linspace(0.0, f64::ln(c) / c, sizes.grid_points);
        let ok = exp_bound_check(c, &grid)?;
        out.push(CheckResult::new(format!("exp_bound_c{c}"), f64::from(u8::from(ok)), 1.0, ok));
    }
    let ok = inverse_bound_check(&linspace(0.0, (-1.0f64).exp(), sizes.grid_points))?;
    out.push(CheckResult::new("inverse_bound", f64::from(u8::from(ok)), 1.0, ok));

    let line = QuadraticModel::uniform(1, 2.0)?;
    let rep = stationarity_check(&line, 0.25, 4, 200, 10, sizes.stationarity_replicas, &sub(0))?;
    let b = rep.truncation_bias;
    let mean_thr = 4.0 * rep.mean_se + b + 1e-12;
    let cov_thr = 4.0 * rep.cov_se + b * b + 1e-12;
    out.push(CheckResult::new("stationarity_mean_gap", rep.mean_gap, mean_thr, rep.mean_gap <= mean_thr));
    out.push(CheckResult::new("stationarity_cov_gap", rep.cov_gap, cov_thr, rep.cov_gap <= cov_thr));

    let p = estimate_increase_probability(&line, 0.25, 4, 4, 200, sizes.increase_samples, &sub(1))?;
    let lower = p - 4.0 * (p * (1.0 - p) / sizes.increase_samples as f64).sqrt();
    out.push(CheckResult::new("increase_probability_lower", lower, 0.0, lower > 0.0));

    let plane = QuadraticModel::uniform(2, 2.0)?;
    let events = sub(2);
    let counts: Vec<usize> = (0..sizes.event_seeds)
        .into_par_iter()
        .map(|s| {
            let st = events.child(StreamId::new(tag::SEED, s as u64, 0));
            count_increase_events(&plane, 0.25, 8, 8, &[0.0, 0.0], sizes.event_steps, &st).map(|e| e.len())
        })
        .collect::<Result<_>>()?;
    let min = counts.iter().copied().min().unwrap_or(0) as f64;
    out.push(CheckResult::new("increase_events_min", min, 1.0, min >= 1.0));
    let frac = counts.iter().filter(|&&c| c > 100).count() as f64 / counts.len() as f64;
    out.push(CheckResult::new("increase_events_over_100", frac, 0.95, frac >= 0.95));

    Ok(out)
}
