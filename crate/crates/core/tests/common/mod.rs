#![allow(dead_code)]

use lrad::activation::Activation;
use lrad::network::{mlp_init, mse_loss_and_grad_flat, MlpArch};
use lrad::rng::{tag, RngStream, StreamId};

pub fn stream(seed: u64, a: u64) -> RngStream {
    RngStream::new(seed, StreamId::new(tag::USER, a, 0))
}

pub fn reference_archs() -> Vec<MlpArch> {
    vec![
        MlpArch::new(vec![6, 128, 1], Activation::Relu).unwrap(),
        MlpArch::new(vec![5, 32, 64, 32, 1], Activation::Gelu).unwrap(),
    ]
}

/// Sign pattern of every hidden pre-activation, computed with plain loops.
fn relu_pattern(arch: &MlpArch, theta: &[f64], inputs: &[f64], n: usize) -> Vec<bool> {
    let w = &arch.widths;
    let mut pattern = Vec::new();
    for s in 0..n {
        let mut a: Vec<f64> = inputs[s * w[0]..(s + 1) * w[0]].to_vec();
        let mut off = 0;
        for l in 0..w.len() - 1 {
            let (fi, fo) = (w[l], w[l + 1]);
            let wm = &theta[off..off + fi * fo];
            let b = &theta[off + fi * fo..off + fi * fo + fo];
            off += fi * fo + fo;
            let z: Vec<f64> = (0..fo).map(|o| b[o] + (0..fi).map(|i| wm[o * fi + i] * a[i]).sum::<f64>()).collect();
            if l + 2 < w.len() {
                pattern.extend(z.iter().map(|v| *v > 0.0));
                a = z.iter().map(|v| v.max(0.0)).collect();
            }
        }
    }
    pattern
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GradCheck {
    pub checked: usize,
    pub skipped: usize,
    pub failures: usize,
    pub worst_excess: f64,
}

/// Compare analytic gradients with central differences (`h = 1e-5`) on one
/// random parameter and batch draw. For ReLU networks a coordinate is skipped
/// when moving it by `h` in either direction flips the sign of any hidden
/// pre-activation, since the difference quotient then straddles a kink.
pub fn gradient_check(arch: &MlpArch, draw: u64, batch: usize) -> GradCheck {
    let h = 1e-5;
    let mut s = stream(700, draw);
    let theta = mlp_init(arch, &mut s).unwrap().into_flat();
    let d = arch.input_dim();
    let inputs: Vec<f64> = (0..batch * d).map(|_| s.uniform(-1.0, 1.0)).collect();
    let targets: Vec<f64> = (0..batch).map(|_| s.uniform(-2.0, 2.0)).collect();
    let mut g = vec![0.0; theta.len()];
    mse_loss_and_grad_flat(arch, &theta, &inputs, &targets, batch, Some(&mut g));

    let relu = arch.activation == Activation::Relu;
    let base = relu.then(|| relu_pattern(arch, &theta, &inputs, batch));

    let mut out = GradCheck::default();
    let mut th = theta.clone();
    for i in 0..theta.len() {
        th[i] = theta[i] + h;
        let lp = mse_loss_and_grad_flat(arch, &th, &inputs, &targets, batch, None);
        let pp = base.as_ref().map(|_| relu_pattern(arch, &th, &inputs, batch));
        th[i] = theta[i] - h;
        let lm = mse_loss_and_grad_flat(arch, &th, &inputs, &targets, batch, None);
        let pm = base.as_ref().map(|_| relu_pattern(arch, &th, &inputs, batch));
        th[i] = theta[i];
        if base.is_some() && (pp != base || pm != base) {
            out.skipped += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * h);
        let tol = f64::max(1e-5, 1e-3 * g[i].abs());
        let err = (fd - g[i]).abs();
        out.checked += 1;
        if err > tol {
            out.failures += 1;
            out.worst_excess = out.worst_excess.max(err / tol);
        }
    }
    out
}

/// Parse a CSV produced by the harness into a header and rows of cells.
pub fn read_csv(path: &std::path::Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}
