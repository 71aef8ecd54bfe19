//! Concrete problems wired into the trainers.

mod dkm;
mod metrics;
mod quadratic;
mod regression;
mod supervised;

pub use dkm::{dkm_label_mean_check, heat_exact, run_dkm_heat, DkmHeatProblem, DkmRun};
pub use metrics::{relative_l2_error, steps_to_reach, BoxDomain};
pub use quadratic::{run_quadratic_convergence, ConvergenceTable, QuadraticBatch, QuadraticExperiment};
pub use regression::{LabelledSampler, MlpBatch, MlpRegression};
pub use supervised::{run_supervised, run_supervised_pair, target_eval, PairedRun, SupervisedRun, SupervisedTarget};
