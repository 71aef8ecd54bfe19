use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::linalg::{axpy, Vector};

/// `theta - gamma * g`
pub fn sgd_step(theta: &[f64], gamma: f64, g: &[f64]) -> Result<Vector> {
    check_dim(theta.len(), g.len())?;
    if !gamma.is_finite() {
        return invalid(format!("learning rate must be finite, got {gamma}"));
    }
    let mut next = theta.to_vec();
    axpy(-gamma, g, &mut next);
    Ok(next)
}

/// How bias correction and moment sharing are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdamVariant {
    /// Bias corrections applied to temporaries; raw moments are kept. Grid
    /// candidates start from fresh moments.
    #[default]
    Standard,
    /// Corrected moments are written back into the accumulators, and grid
    /// candidates share one pair of moment buffers in grid order.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "AdamConfig::default_beta1")]
    pub beta1: f64,
    #[serde(default = "AdamConfig::default_beta2")]
    pub beta2: f64,
    #[serde(default = "AdamConfig::default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub variant: AdamVariant,
}

impl AdamConfig {
    fn default_beta1() -> f64 {
        0.9
    }
    fn default_beta2() -> f64 {
        0.999
    }
    fn default_eps() -> f64 {
        1e-8
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            // beta = 1 makes the bias-correction denominator vanish
            if !(0.0..1.0).contains(&b) {
                return invalid(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) {
            return invalid(format!("eps must be positive, got {}", self.eps));
        }
        Ok(())
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: Self::default_beta1(),
            beta2: Self::default_beta2(),
            eps: Self::default_eps(),
            variant: AdamVariant::Standard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    Sgd,
    Adam(AdamConfig),
}

impl OptimizerKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerKind::Sgd => Ok(()),
            OptimizerKind::Adam(c) => c.validate(),
        }
    }
}

/// Raw first and second moments plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vector,
    pub v: Vector,
    pub step: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self { m: vec![0.0; dim], v: vec![0.0; dim], step: 0 }
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.step = 0;
    }

    /// In-place Adam update of `theta`. Increments the step counter first, so
    /// the corrections use `1 - beta^i` with `i >= 1`.
    pub fn update(&mut self, theta: &mut [f64], gamma: f64, g: &[f64], cfg: &AdamConfig) {
        self.step += 1;
        self.update_with_index(theta, gamma, g, cfg, self.step);
    }

    /// Same as [`AdamState::update`] with an explicit correction index `i`;
    /// the literal grid search restarts `i` per candidate while sharing moments.
    pub(crate) fn update_with_index(&mut self, theta: &mut [f64], gamma: f64, g: &[f64], cfg: &AdamConfig, i: u64) {
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(i as i32);
        let c2 = 1.0 - b2.powi(i as i32);
        for j in 0..theta.len() {
            let gj = g[j];
            let mut m = b1 * self.m[j] + (1.0 - b1) * gj;
            let mut v = b2 * self.v[j] + (1.0 - b2) * gj * gj;
            let (m_hat, v_hat) = (m / c1, v / c2);
            if cfg.variant == AdamVariant::Literal {
                m = m_hat;
                v = v_hat;
            }
            self.m[j] = m;
            self.v[j] = v;
            theta[j] -= gamma * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// Functional form of one Adam step: returns the next state and parameters.
pub fn adam_step(state: &AdamState, theta: &[f64], gamma: f64, g: &[f64], cfg: &AdamConfig) -> Result<(AdamState, Vector)> {
    cfg.validate()?;
    check_dim(theta.len(), g.len())?;
    check_dim(theta.len(), state.m.len())?;
    check_dim(theta.len(), state.v.len())?;
    let mut next_state = state.clone();
    let mut next = theta.to_vec();
    next_state.update(&mut next, gamma, g, cfg);
    Ok((next_state, next))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_examples() {
        assert_eq!(sgd_step(&[1.0, 2.0], 0.3, &[0.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        let s = sgd_step(&[0.0, 0.0], 0.1, &[1.0, -2.0]).unwrap();
        assert!((s[0] + 0.1).abs() < 1e-16 && (s[1] - 0.2).abs() < 1e-16);
        let g = [0.4, -1.2];
        let half = sgd_step(&sgd_step(&[1.0, 1.0], 0.05, &g).unwrap(), 0.05, &g).unwrap();
        let full = sgd_step(&[1.0, 1.0], 0.1, &g).unwrap();
        for (a, b) in half.iter().zip(&full) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(sgd_step(&[1.0], 0.1, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn adam_first_step_by_hand() {
        let cfg = AdamConfig::default();
        let (st, th) = adam_step(&AdamState::new(1), &[0.0], 0.01, &[2.0], &cfg).unwrap();
        assert!((st.m[0] - 0.2).abs() < 1e-15);
        assert!((st.v[0] - 0.004).abs() < 1e-15);
        assert_eq!(st.step, 1);
        // m_hat = 2, v_hat = 4, step = 0.01 * 2 / (2 + 1e-8)
        assert!((th[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn adam_zero_gradient() {
        let cfg = AdamConfig::default();
        let (st, th) = adam_step(&AdamState::new(2), &[0.5, -0.5], 0.1, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(th, vec![0.5, -0.5]);
        assert_eq!(st.m, vec![0.0, 0.0]);
        assert_eq!(st.v, vec![0.0, 0.0]);
    }

    #[test]
    fn adam_constant_gradient_step_size() {
        let cfg = AdamConfig::default();
        let mut st = AdamState::new(1);
        let mut th = vec![0.0];
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = th[0];
            st.update(&mut th, 0.01, &[3.0], &cfg);
            last = before - th[0];
        }
        assert!((last - 0.01 * 3.0 / (3.0 + 1e-8)).abs() < 1e-12);
    }

    #[test]
    fn literal_variant_overwrites_moments() {
        let lit = AdamConfig { variant: AdamVariant::Literal, ..AdamConfig::default() };
        let (st, _) = adam_step(&AdamState::new(1), &[0.0], 0.01, &[2.0], &lit).unwrap();
        assert!((st.m[0] - 2.0).abs() < 1e-12);
        assert!((st.v[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig { eps: 0.0, ..AdamConfig::default() }.validate().is_err());
        assert!(AdamConfig { beta1: 1.0, ..AdamConfig::default() }.validate().is_err());
        assert!(AdamConfig { beta2: -0.1, ..AdamConfig::default() }.validate().is_err());
        let s = AdamState::new(1);
        let bad = AdamConfig { eps: -1.0, ..AdamConfig::default() };
        assert!(adam_step(&s, &[0.0], 0.1, &[1.0], &bad).is_err());
    }
}
