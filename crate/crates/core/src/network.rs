//! Fully connected feedforward network with hand-written backpropagation.
//!
//! Parameters live in one flat vector, laid out layer by layer as the weight
//! matrix (`out x in`, row-major) followed by the bias (`out`). Optimizers see
//! only that flat vector; `MlpParams` adds the shape on top.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{gemm, Vector};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArch {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

impl MlpArch {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        let a = Self { widths, activation };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return invalid("architecture needs at least input and output widths");
        }
        if self.widths.contains(&0) {
            return invalid("layer widths must be positive");
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    fn layers(&self) -> Vec<Layer> {
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let l = Layer { fan_in: w[0], fan_out: w[1], w: off, b: off + w[0] * w[1] };
                off = l.b + w[1];
                l
            })
            .collect()
    }
}

macro_rules! layered_buffer {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            arch: MlpArch,
            flat: Vector,
        }

        impl $name {
            pub fn from_flat(arch: MlpArch, flat: Vector) -> Result<Self> {
                arch.validate()?;
                check_dim(arch.param_count(), flat.len())?;
                Ok(Self { arch, flat })
            }

            pub fn zeros(arch: MlpArch) -> Self {
                let n = arch.param_count();
                Self { arch, flat: vec![0.0; n] }
            }

            pub fn arch(&self) -> &MlpArch {
                &self.arch
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.flat
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.flat
            }

            pub fn into_flat(self) -> Vector {
                self.flat
            }

            /// Weight matrix of layer `l`, `out x in` row-major.
            pub fn weights(&self, l: usize) -> &[f64] {
                let ly = self.arch.layers()[l];
                &self.flat[ly.w..ly.b]
            }

            pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
                let ly = self.arch.layers()[l];
                &mut self.flat[ly.w..ly.b]
            }

            pub fn bias(&self, l: usize) -> &[f64] {
                let ly = self.arch.layers()[l];
                &self.flat[ly.b..ly.b + ly.fan_out]
            }

            pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
                let ly = self.arch.layers()[l];
                &mut self.flat[ly.b..ly.b + ly.fan_out]
            }
        }
    };
}

layered_buffer!(MlpParams);
layered_buffer!(MlpGrads);

/// Weights and biases of each layer drawn from `Uniform[-s, s]` with
/// `s = 1 / sqrt(fan_in)`.
pub fn mlp_init(arch: &MlpArch, stream: &mut RngStream) -> Result<MlpParams> {
    arch.validate()?;
    let mut p = MlpParams::zeros(arch.clone());
    for (l, ly) in arch.layers().into_iter().enumerate() {
        let s = 1.0 / (ly.fan_in as f64).sqrt();
        for w in p.weights_mut(l) {
            *w = stream.uniform(-s, s);
        }
        for b in p.bias_mut(l) {
            *b = stream.uniform(-s, s);
        }
    }
    Ok(p)
}

pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vector> {
    check_dim(params.arch.input_dim(), x.len())?;
    Ok(forward_batch(&params.arch, &params.flat, x, 1))
}

/// Forward pass over `n` row-major inputs; returns the `n x out` outputs.
pub fn forward_batch(arch: &MlpArch, theta: &[f64], inputs: &[f64], n: usize) -> Vector {
    let layers = arch.layers();
    let last = layers.len() - 1;
    let mut a = inputs.to_vec();
    for (l, ly) in layers.iter().enumerate() {
        let mut z = affine(ly, theta, &a, n);
        if l < last {
            z.iter_mut().for_each(|v| *v = arch.activation.apply(*v));
        }
        a = z;
    }
    a
}

fn affine(ly: &Layer, theta: &[f64], a: &[f64], n: usize) -> Vector {
    let w = &theta[ly.w..ly.b];
    let b = &theta[ly.b..ly.b + ly.fan_out];
    let mut z = Vec::with_capacity(n * ly.fan_out);
    for _ in 0..n {
        z.extend_from_slice(b);
    }
    gemm(n, ly.fan_in, ly.fan_out, 1.0, a, false, w, true, 1.0, &mut z);
    z
}

/// Mean squared error `(1/n) sum_i |net(x_i) - y_i|^2` over `n` row-major
/// inputs and `n x out` targets. When `grad` is given it receives the exact
/// gradient with respect to the flat parameter vector.
pub fn mse_loss_and_grad_flat(
    arch: &MlpArch,
    theta: &[f64],
    inputs: &[f64],
    targets: &[f64],
    n: usize,
    grad: Option<&mut [f64]>,
) -> f64 {
    let layers = arch.layers();
    let last = layers.len() - 1;
    // pre[l] holds layer l's pre-activation; post[l] is its input.
    let mut post: Vec<Vector> = Vec::with_capacity(layers.len());
    let mut pre: Vec<Vector> = Vec::with_capacity(layers.len());
    let mut a = inputs.to_vec();
    for (l, ly) in layers.iter().enumerate() {
        let z = affine(ly, theta, &a, n);
        let next = if l < last { z.iter().map(|v| arch.activation.apply(*v)).collect() } else { z.clone() };
        post.push(std::mem::replace(&mut a, next));
        pre.push(z);
    }

    let inv_n = 1.0 / n as f64;
    let mut delta: Vector = a.iter().zip(targets).map(|(o, y)| o - y).collect();
    let loss = delta.iter().map(|r| r * r).sum::<f64>() * inv_n;

    let Some(grad) = grad else {
        return loss;
    };
    delta.iter_mut().for_each(|r| *r *= 2.0 * inv_n);
    for l in (0..layers.len()).rev() {
        let ly = layers[l];
        // dW = delta^T * input, db = column sums of delta
        gemm(ly.fan_out, n, ly.fan_in, 1.0, &delta, true, &post[l], false, 0.0, &mut grad[ly.w..ly.b]);
        let gb = &mut grad[ly.b..ly.b + ly.fan_out];
        gb.iter_mut().for_each(|g| *g = 0.0);
        for row in delta.chunks_exact(ly.fan_out) {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        if l > 0 {
            let mut back = vec![0.0; n * ly.fan_in];
            gemm(n, ly.fan_out, ly.fan_in, 1.0, &delta, false, &theta[ly.w..ly.b], false, 0.0, &mut back);
            for (bk, z) in back.iter_mut().zip(&pre[l - 1]) {
                *bk *= arch.activation.derivative(*z);
            }
            delta = back;
        }
    }
    loss
}

fn pack_batch(arch: &MlpArch, batch_x: &[Vector], batch_y: &[f64]) -> Result<Vector> {
    if batch_x.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if arch.output_dim() != 1 {
        return invalid("scalar targets need an output width of 1");
    }
    check_dim(batch_x.len(), batch_y.len())?;
    let mut flat = Vec::with_capacity(batch_x.len() * arch.input_dim());
    for x in batch_x {
        check_dim(arch.input_dim(), x.len())?;
        flat.extend_from_slice(x);
    }
    Ok(flat)
}

/// Batch MSE and its gradient for a scalar-output network.
pub fn mlp_loss_and_grad(params: &MlpParams, batch_x: &[Vector], batch_y: &[f64]) -> Result<(f64, MlpGrads)> {
    let inputs = pack_batch(&params.arch, batch_x, batch_y)?;
    let mut g = MlpGrads::zeros(params.arch.clone());
    let loss = mse_loss_and_grad_flat(&params.arch, &params.flat, &inputs, batch_y, batch_x.len(), Some(&mut g.flat));
    Ok((loss, g))
}

pub fn mlp_loss(params: &MlpParams, batch_x: &[Vector], batch_y: &[f64]) -> Result<f64> {
    let inputs = pack_batch(&params.arch, batch_x, batch_y)?;
    Ok(mse_loss_and_grad_flat(&params.arch, &params.flat, &inputs, batch_y, batch_x.len(), None))
}

const SNAPSHOT_FORMAT: &str = "lrad-mlp-params";

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotHeader {
    format: String,
    version: u32,
    arch: MlpArch,
    param_count: usize,
}

/// Writes `u64 LE header length | JSON header | param_count f64 LE values`.
pub fn write_snapshot<W: Write>(params: &MlpParams, mut w: W) -> Result<()> {
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.into(),
        version: 1,
        arch: params.arch.clone(),
        param_count: params.flat.len(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in &params.flat {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<MlpParams> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 20 {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json)?;
    let header: SnapshotHeader = serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
    if header.format != SNAPSHOT_FORMAT || header.version != 1 {
        return Err(Error::Format(format!("unsupported snapshot {} v{}", header.format, header.version)));
    }
    header.arch.validate()?;
    check_dim(header.arch.param_count(), header.param_count)?;
    let mut flat = Vec::with_capacity(header.param_count);
    let mut buf = [0u8; 8];
    for _ in 0..header.param_count {
        r.read_exact(&mut buf)?;
        flat.push(f64::from_le_bytes(buf));
    }
    MlpParams::from_flat(header.arch, flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{tag, StreamId};

    fn stream(seed: u64) -> RngStream {
        RngStream::new(seed, StreamId::new(tag::INIT, 0, 0))
    }

    #[test]
    fn arch_validation() {
        assert!(MlpArch::new(vec![3], Activation::Relu).is_err());
        assert!(MlpArch::new(vec![3, 0, 1], Activation::Relu).is_err());
        let a = MlpArch::new(vec![6, 128, 1], Activation::Relu).unwrap();
        assert_eq!(a.param_count(), 6 * 128 + 128 + 128 + 1);
    }

    #[test]
    fn init_is_reproducible_and_bounded() {
        let a = MlpArch::new(vec![1, 1], Activation::Relu).unwrap();
        let p = mlp_init(&a, &mut stream(1)).unwrap();
        assert_eq!(p.as_slice().len(), 2);
        assert_eq!(p, mlp_init(&a, &mut stream(1)).unwrap());
        assert_ne!(p, mlp_init(&a, &mut stream(2)).unwrap());

        let big = MlpArch::new(vec![5, 32, 64, 32, 1], Activation::Gelu).unwrap();
        let q = mlp_init(&big, &mut stream(3)).unwrap();
        for (l, fan_in) in [5usize, 32, 64, 32].into_iter().enumerate() {
            let s = 1.0 / (fan_in as f64).sqrt();
            assert!(q.weights(l).iter().chain(q.bias(l)).all(|w| w.abs() <= s));
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let a = MlpArch::new(vec![3, 4, 2], Activation::Gelu).unwrap();
        let p = MlpParams::zeros(a);
        assert_eq!(mlp_forward(&p, &[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert!(mlp_forward(&p, &[1.0]).is_err());
    }

    #[test]
    fn single_linear_layer() {
        let a = MlpArch::new(vec![3, 1], Activation::Relu).unwrap();
        let p = MlpParams::from_flat(a, vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        let y = mlp_forward(&p, &[2.0, 3.0, -1.0]).unwrap();
        assert_eq!(y, vec![1.0 - 3.0 - 2.0 + 0.25]);
    }

    #[test]
    fn hand_computed_relu_net() {
        // hidden: W1 = [[1, -1], [0.5, 2]], b1 = [0, -1]
        // output: W2 = [[2, -3]], b2 = [0.5]
        let a = MlpArch::new(vec![2, 2, 1], Activation::Relu).unwrap();
        let p = MlpParams::from_flat(a, vec![1.0, -1.0, 0.5, 2.0, 0.0, -1.0, 2.0, -3.0, 0.5]).unwrap();
        // x = (1, 2): z1 = (-1, 3.5), h = (0, 3.5), out = -10.5 + 0.5
        assert_eq!(mlp_forward(&p, &[1.0, 2.0]).unwrap(), vec![-10.0]);
        // x = (3, 1): z1 = (2, 2.5), h = (2, 2.5), out = 4 - 7.5 + 0.5
        assert_eq!(mlp_forward(&p, &[3.0, 1.0]).unwrap(), vec![-3.0]);
    }

    #[test]
    fn linear_neuron_gradient() {
        let a = MlpArch::new(vec![2, 1], Activation::Relu).unwrap();
        let p = MlpParams::from_flat(a, vec![0.3, -0.7, 0.1]).unwrap();
        let x = vec![1.5, 2.0];
        let y = 0.4;
        let (loss, g) = mlp_loss_and_grad(&p, std::slice::from_ref(&x), &[y]).unwrap();
        let r = 0.3 * 1.5 - 0.7 * 2.0 + 0.1 - y;
        assert!((loss - r * r).abs() < 1e-15);
        assert!((g.weights(0)[0] - 2.0 * r * x[0]).abs() < 1e-15);
        assert!((g.weights(0)[1] - 2.0 * r * x[1]).abs() < 1e-15);
        assert!((g.bias(0)[0] - 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn perfect_fit_has_zero_loss_and_gradient() {
        let a = MlpArch::new(vec![2, 3, 1], Activation::Gelu).unwrap();
        let p = mlp_init(&a, &mut stream(4)).unwrap();
        let xs = vec![vec![0.1, 0.2], vec![-0.3, 0.9]];
        let ys: Vec<f64> = xs.iter().map(|x| mlp_forward(&p, x).unwrap()[0]).collect();
        let (loss, g) = mlp_loss_and_grad(&p, &xs, &ys).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn batch_errors() {
        let a = MlpArch::new(vec![2, 1], Activation::Relu).unwrap();
        let p = MlpParams::zeros(a);
        assert_eq!(mlp_loss_and_grad(&p, &[], &[]).unwrap_err(), Error::EmptyBatch);
        assert!(mlp_loss_and_grad(&p, &[vec![1.0, 2.0]], &[1.0, 2.0]).is_err());
        assert!(mlp_loss_and_grad(&p, &[vec![1.0]], &[1.0]).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let a = MlpArch::new(vec![3, 5, 1], Activation::Gelu).unwrap();
        let p = mlp_init(&a, &mut stream(5)).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&p, &mut buf).unwrap();
        assert_eq!(read_snapshot(buf.as_slice()).unwrap(), p);
        buf.truncate(buf.len() - 3);
        assert!(read_snapshot(buf.as_slice()).is_err());
    }
}
