use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::activation::Activation;
use crate::experiments::QuadraticExperiment;
use crate::network::MlpArch;
use crate::optim::{AdamConfig, AdaptiveTrainerConfig, GridSpec, OptimizerKind};
use crate::quadratic::{DataDist, NuSequence, QuadraticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Supervised,
    DkmHeat,
    Quadratic,
    TheoryChecks,
}

impl ExperimentKind {
    pub fn stream_tag(self) -> u16 {
        use crate::rng::tag;
        match self {
            ExperimentKind::Supervised => tag::SUPERVISED,
            ExperimentKind::DkmHeat => tag::DKM_HEAT,
            ExperimentKind::Quadratic => tag::QUADRATIC,
            ExperimentKind::TheoryChecks => tag::THEORY,
        }
    }

    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Supervised => &[
                "batch", "test_size", "trial_steps", "tolerance", "grid_size", "eta", "gamma0", "steps",
                "optimizer", "arch", "d", "eval_every", "constant_baseline",
            ],
            ExperimentKind::DkmHeat => &[
                "batch", "test_size", "trial_steps", "tolerance", "grid_size", "eta", "gamma0", "steps",
                "optimizer", "arch", "d", "pde_time", "n_mc",
            ],
            ExperimentKind::Quadratic => {
                &["steps", "batch", "test_batch", "d", "grad_factor", "data", "nu", "probes", "theta0"]
            }
            ExperimentKind::TheoryChecks => {
                &["increase_samples", "stationarity_replicas", "event_seeds", "event_steps", "grid_points"]
            }
        }
    }
}

/// Experiment description as read from JSON. Absent fields are filled by
/// [`ExperimentDescriptor::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDescriptor {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch: Option<MlpArch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,

    /// Held-out evaluation interval in steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<usize>,
    /// Also train at the constant rate `gamma0` from the same start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_baseline: Option<bool>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mc: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_batch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataDist>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<NuSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increase_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity_replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

fn fill<T>(slot: &mut Option<T>, v: T) {
    if slot.is_none() {
        *slot = Some(v);
    }
}

impl ExperimentDescriptor {
    /// A descriptor with only the experiment kind set.
    pub fn minimal(experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment })).expect("minimal descriptor")
    }

    /// Fill every unset field relevant to the experiment kind with its
    /// default.
    pub fn resolve(mut self) -> Self {
        fill(&mut self.seeds, 1);
        fill(&mut self.output_dir, PathBuf::from("lrad-out"));
        match self.experiment {
            ExperimentKind::Supervised | ExperimentKind::DkmHeat => {
                let dkm = self.experiment == ExperimentKind::DkmHeat;
                fill(&mut self.batch, 256);
                fill(&mut self.test_size, 2000);
                fill(&mut self.trial_steps, 50);
                fill(&mut self.tolerance, 400);
                fill(&mut self.grid_size, 5);
                fill(&mut self.eta, 4.0);
                fill(&mut self.gamma0, 1e-3);
                fill(&mut self.steps, 20_000);
                fill(&mut self.optimizer, OptimizerKind::Adam(AdamConfig::default()));
                if dkm {
                    let d = *self.d.get_or_insert(self.arch.as_ref().map_or(5, MlpArch::input_dim));
                    fill(&mut self.arch, MlpArch { widths: vec![d, 32, 64, 32, 1], activation: Activation::Gelu });
                    fill(&mut self.pde_time, 1.0);
                    fill(&mut self.n_mc, 100_000);
                } else {
                    let d = *self.d.get_or_insert(self.arch.as_ref().map_or(6, MlpArch::input_dim));
                    fill(&mut self.arch, MlpArch { widths: vec![d, 128, 1], activation: Activation::Relu });
                    fill(&mut self.eval_every, 100);
                    fill(&mut self.constant_baseline, true);
                }
            }
            ExperimentKind::Quadratic => {
                fill(&mut self.steps, 10_000);
                fill(&mut self.batch, 16);
                fill(&mut self.test_batch, 16);
                let d = *self.d.get_or_insert(self.theta0.as_ref().map_or(2, Vec::len));
                fill(&mut self.grad_factor, 2.0);
                fill(&mut self.data, DataDist::default());
                fill(&mut self.nu, NuSequence::Harmonic { nu1: 0.4 });
                fill(&mut self.probes, vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0]);
                fill(&mut self.theta0, vec![0.0; d]);
            }
            ExperimentKind::TheoryChecks => {
                let s = super::theory::TheorySizes::default();
                fill(&mut self.increase_samples, s.increase_samples);
                fill(&mut self.stationarity_replicas, s.stationarity_replicas);
                fill(&mut self.event_seeds, s.event_seeds);
                fill(&mut self.event_steps, s.event_steps);
                fill(&mut self.grid_points, s.grid_points);
            }
        }
        self
    }

    /// Trainer settings of a resolved supervised or DKM descriptor.
    pub fn trainer(&self) -> Option<AdaptiveTrainerConfig> {
        Some(AdaptiveTrainerConfig {
            batch: self.batch?,
            test_size: self.test_size?,
            trial_steps: self.trial_steps?,
            tolerance: self.tolerance?,
            grid_size: self.grid_size?,
            eta: self.eta?,
            gamma0: self.gamma0?,
            steps: self.steps?,
            optimizer: self.optimizer?,
        })
    }

    pub fn quadratic_model(&self) -> Option<QuadraticModel> {
        Some(QuadraticModel { d: self.d?, grad_factor: self.grad_factor?, data: self.data.clone()? })
    }

    pub fn quadratic_experiment(&self) -> Option<QuadraticExperiment> {
        Some(QuadraticExperiment {
            model: self.quadratic_model()?,
            nu: self.nu.clone()?,
            batch: self.batch?,
            test_batch: self.test_batch?,
            max_steps: self.steps? as u64,
            probes: self.probes.clone()?,
            theta0: self.theta0.clone(),
        })
    }

    pub fn theory_sizes(&self) -> Option<super::theory::TheorySizes> {
        Some(super::theory::TheorySizes {
            increase_samples: self.increase_samples?,
            stationarity_replicas: self.stationarity_replicas?,
            event_seeds: self.event_seeds?,
            event_steps: self.event_steps?,
            grid_points: self.grid_points?,
        })
    }

    /// Check a resolved descriptor.
    pub fn validate(&self) -> crate::Result<()> {
        use crate::error::invalid;
        if self.seeds == Some(0) {
            return invalid("seeds must be at least 1");
        }
        match self.experiment {
            ExperimentKind::Supervised | ExperimentKind::DkmHeat => {
                let cfg = self.trainer().ok_or_else(unresolved)?;
                cfg.validate()?;
                GridSpec::new(cfg.grid_size, cfg.eta, cfg.gamma0)?;
                let arch = self.arch.as_ref().ok_or_else(unresolved)?;
                arch.validate()?;
                if Some(arch.input_dim()) != self.d {
                    return invalid(format!("arch input width {} differs from d", arch.input_dim()));
                }
                if arch.output_dim() != 1 {
                    return invalid("arch must end in a single output");
                }
                if self.eval_every == Some(0) {
                    return invalid("eval_every must be at least 1");
                }
                if let Some(t) = self.pde_time {
                    if !(t > 0.0) || !t.is_finite() {
                        return invalid("pde_time must be positive");
                    }
                }
                if self.n_mc == Some(0) {
                    return invalid("n_mc must be at least 1");
                }
            }
            ExperimentKind::Quadratic => {
                let e = self.quadratic_experiment().ok_or_else(unresolved)?;
                e.validate()?;
                if e.batch == 0 || e.test_batch == 0 {
                    return invalid("batch sizes must be at least 1");
                }
                if !(e.model.grad_factor * e.nu.first() < 2.0) {
                    return invalid("grad_factor * nu1 must be below 2");
                }
            }
            ExperimentKind::TheoryChecks => {
                let s = self.theory_sizes().ok_or_else(unresolved)?;
                if s.increase_samples == 0 || s.stationarity_replicas < 2 || s.event_seeds == 0 || s.grid_points == 0 {
                    return invalid("theory check sizes must be positive");
                }
            }
        }
        Ok(())
    }
}

fn unresolved() -> crate::Error {
    crate::Error::InvalidArgument("descriptor has unresolved fields".into())
}

/// Read, default and validate a descriptor file.
pub fn parse_descriptor(path: &Path) -> Result<ExperimentDescriptor, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::MissingFile(format!("{}: {e}", path.display())))?;
    parse_descriptor_str(&text)
}

pub fn parse_descriptor_str(text: &str) -> Result<ExperimentDescriptor, HarnessError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| HarnessError::Malformed(e.to_string()))?;
    let desc: ExperimentDescriptor =
        serde_json::from_value(raw.clone()).map_err(|e| HarnessError::Invalid(e.to_string()))?;
    let allowed = desc.experiment.allowed_keys();
    if let Value::Object(map) = &raw {
        for k in map.keys() {
            let common = matches!(k.as_str(), "experiment" | "seed" | "seeds" | "output_dir");
            if !common && !allowed.contains(&k.as_str()) {
                return Err(HarnessError::Invalid(format!(
                    "key `{k}` does not apply to experiment {}",
                    serde_json::to_string(&desc.experiment).unwrap_or_default()
                )));
            }
        }
    }
    let desc = desc.resolve();
    desc.validate().map_err(|e| HarnessError::Invalid(e.to_string()))?;
    Ok(desc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_supervised_defaults() {
        let d = parse_descriptor_str(r#"{"experiment": "supervised"}"#).unwrap();
        let c = d.trainer().unwrap();
        assert_eq!(
            (c.trial_steps, c.grid_size, c.eta, c.tolerance, c.batch, c.test_size),
            (50, 5, 4.0, 400, 256, 2000)
        );
        assert_eq!(d.arch.unwrap().widths, vec![6, 128, 1]);
    }

    #[test]
    fn error_classes() {
        assert!(matches!(parse_descriptor_str("{"), Err(HarnessError::Malformed(_))));
        assert!(matches!(
            parse_descriptor_str(r#"{"experiment": "supervised", "foo": 1}"#),
            Err(HarnessError::Invalid(_))
        ));
        assert!(matches!(
            parse_descriptor_str(r#"{"experiment": "supervised", "eta": 1.0}"#),
            Err(HarnessError::Invalid(_))
        ));
        assert!(matches!(
            parse_descriptor_str(r#"{"experiment": "quadratic", "eta": 2.0}"#),
            Err(HarnessError::Invalid(_))
        ));
        assert!(matches!(parse_descriptor(Path::new("/nonexistent/x.json")), Err(HarnessError::MissingFile(_))));
    }

    #[test]
    fn resolved_round_trips() {
        for k in [
            ExperimentKind::Supervised,
            ExperimentKind::DkmHeat,
            ExperimentKind::Quadratic,
            ExperimentKind::TheoryChecks,
        ] {
            let d = ExperimentDescriptor::minimal(k).resolve();
            let text = serde_json::to_string(&d).unwrap();
            assert_eq!(parse_descriptor_str(&text).unwrap(), d);
        }
    }
}
