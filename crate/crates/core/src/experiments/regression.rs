use crate::linalg::Vector;
use crate::network::{forward_batch, mse_loss_and_grad_flat, MlpArch};
use crate::optim::Problem;
use crate::rng::RngStream;

/// Draws one `(input, label)` pair.
pub trait LabelledSampler: Sync {
    fn input_dim(&self) -> usize;
    /// Writes the input into `x` and returns the label.
    fn sample(&self, stream: &mut RngStream, x: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpBatch {
    /// `n x input_dim`, row-major.
    pub inputs: Vector,
    pub targets: Vector,
}

impl MlpBatch {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Scalar-output MSE regression of a network onto a sampler's labels.
#[derive(Debug, Clone)]
pub struct MlpRegression<S> {
    pub arch: MlpArch,
    pub sampler: S,
}

impl<S: LabelledSampler> MlpRegression<S> {
    pub fn new(arch: MlpArch, sampler: S) -> crate::Result<Self> {
        arch.validate()?;
        crate::error::check_dim(sampler.input_dim(), arch.input_dim())?;
        if arch.output_dim() != 1 {
            return Err(crate::Error::InvalidArgument("regression needs a scalar output".into()));
        }
        Ok(Self { arch, sampler })
    }

    pub fn predict(&self, theta: &[f64], x: &[f64]) -> f64 {
        forward_batch(&self.arch, theta, x, 1)[0]
    }
}

impl<S: LabelledSampler> Problem for MlpRegression<S> {
    type Batch = MlpBatch;

    fn param_dim(&self) -> usize {
        self.arch.param_count()
    }

    fn sample_batch(&self, stream: &mut RngStream, size: usize) -> MlpBatch {
        let d = self.sampler.input_dim();
        let mut inputs = vec![0.0; size * d];
        let targets = inputs.chunks_exact_mut(d).map(|x| self.sampler.sample(stream, x)).collect();
        MlpBatch { inputs, targets }
    }

    fn loss_and_grad(&self, theta: &[f64], batch: &MlpBatch) -> (f64, Vector) {
        let mut g = vec![0.0; theta.len()];
        let l = mse_loss_and_grad_flat(&self.arch, theta, &batch.inputs, &batch.targets, batch.len(), Some(&mut g));
        (l, g)
    }

    fn loss(&self, theta: &[f64], batch: &MlpBatch) -> f64 {
        mse_loss_and_grad_flat(&self.arch, theta, &batch.inputs, &batch.targets, batch.len(), None)
    }
}
