//! C ABI over the `lrad` library.
//!
//! Objects cross the boundary as opaque handles created by `lrad_*_new` and
//! released by the matching `lrad_*_free`. Every fallible function returns an
//! [`LradStatus`]. On failure a description is available from
//! [`lrad_last_error`] until the next failing call on the same thread.
//!
//! Arrays are passed as a pointer plus an element count. Matrices are
//! row-major. A null pointer is accepted only when its count is zero.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lrad::activation::Activation;
use lrad::network::{forward_batch, mlp_init, mse_loss_and_grad_flat, MlpArch, MlpParams};
use lrad::optim::Theorem1Sgd;
use lrad::quadratic::{
    closed_form_state, estimate_increase_probability, quad_sgd_step, NuSequence, QuadraticModel,
};
use lrad::rng::{RngStream, StreamId};
use lrad::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LradStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EmptyBatch = 4,
    HorizonNotReached = 5,
    LadderExhausted = 6,
    NumericFailure = 7,
    Io = 8,
    Format = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LradActivation {
    Relu = 0,
    Gelu = 1,
}

/// Deterministic random stream.
pub struct LradStream(RngStream);

/// Quadratic loss `(c/2)|theta - x|^2` with data uniform on `[0, 1]^d`.
pub struct LradQuadratic(QuadraticModel);

/// Fully connected network together with its parameters.
pub struct LradMlp(MlpParams);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LradStatus {
    match e {
        Error::InvalidArgument(_) => LradStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => LradStatus::DimensionMismatch,
        Error::EmptyBatch => LradStatus::EmptyBatch,
        Error::HorizonNotReached { .. } => LradStatus::HorizonNotReached,
        Error::LadderExhausted(_) => LradStatus::LadderExhausted,
        Error::NumericFailure(_) => LradStatus::NumericFailure,
        Error::Io(_) => LradStatus::Io,
        Error::Format(_) => LradStatus::Format,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LradStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LradStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LradStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            LradStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &'static str) -> Result<&'a [T], Fail> {
    match (p.is_null(), n) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(Fail::Null(what)),
        (false, _) => Ok(std::slice::from_raw_parts(p, n)),
    }
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    match (p.is_null(), n) {
        (_, 0) => Ok(&mut []),
        (true, _) => Err(Fail::Null(what)),
        (false, _) => Ok(std::slice::from_raw_parts_mut(p, n)),
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn out<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    p.write(v);
    Ok(())
}

fn expect_len(expected: usize, found: usize) -> Result<(), Fail> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found }.into())
    }
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn lrad_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

// streams

/// # Safety
/// `out_stream` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn lrad_stream_new(seed: u64, tag: u16, a: u64, b: u64, out_stream: *mut *mut LradStream) -> LradStatus {
    guard(|| {
        let s = Box::new(LradStream(RngStream::new(seed, StreamId::new(tag, a, b))));
        out(out_stream, Box::into_raw(s), "out_stream")
    })
}

/// Independent child stream keyed by the parent and `(tag, a, b)`.
///
/// # Safety
/// `parent` must be a live stream handle and `out_stream` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn lrad_stream_child(
    parent: *const LradStream,
    tag: u16,
    a: u64,
    b: u64,
    out_stream: *mut *mut LradStream,
) -> LradStatus {
    guard(|| {
        let p = handle(parent, "parent")?;
        let s = Box::new(LradStream(p.0.child(StreamId::new(tag, a, b))));
        out(out_stream, Box::into_raw(s), "out_stream")
    })
}

/// # Safety
/// `stream` must be null or a handle from `lrad_stream_new`/`lrad_stream_child`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn lrad_stream_free(stream: *mut LradStream) {
    free(stream);
}

/// # Safety
/// `stream` must be live and `value` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn lrad_stream_next_u64(stream: *mut LradStream, value: *mut u64) -> LradStatus {
    guard(|| {
        let s = handle_mut(stream, "stream")?;
        out(value, s.0.next_u64(), "value")
    })
}

/// Fill `values[0..n]` with draws from `U[a, b]`.
///
/// # Safety
/// `stream` must be live and `values` valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn lrad_stream_uniform(stream: *mut LradStream, a: f64, b: f64, values: *mut f64, n: usize) -> LradStatus {
    guard(|| {
        let s = handle_mut(stream, "stream")?;
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("need a < b, got [{a}, {b}]")).into());
        }
        s.0.fill_uniform(a, b, slice_mut(values, n, "values")?);
        Ok(())
    })
}

/// Fill `values[0..n]` with standard normal draws.
///
/// # Safety
/// `stream` must be live and `values` valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn lrad_stream_std_normal(stream: *mut LradStream, values: *mut f64, n: usize) -> LradStatus {
    guard(|| {
        let s = handle_mut(stream, "stream")?;
        s.0.fill_std_normal(slice_mut(values, n, "values")?);
        Ok(())
    })
}

// quadratic problem

/// # Safety
/// `out_model` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn lrad_quadratic_new(d: usize, grad_factor: f64, out_model: *mut *mut LradQuadratic) -> LradStatus {
    guard(|| {
        let m = Box::new(LradQuadratic(QuadraticModel::uniform(d, grad_factor)?));
        out(out_model, Box::into_raw(m), "out_model")
    })
}

/// # Safety
/// `model` must be null or a live handle from `lrad_quadratic_new`.
#[no_mangle]
pub unsafe extern "C" fn lrad_quadratic_free(model: *mut LradQuadratic) {
    free(model);
}

/// Dimension `d`, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn lrad_quadratic_dim(model: *const LradQuadratic) -> usize {
    model.as_ref().map_or(0, |m| m.0.d)
}

/// One constant-rate SGD step on the `m x d` batch, updating `theta` in place.
///
/// # Safety
/// `theta` must hold `d` values and `batch` `m * d` values.
#[no_mangle]
pub unsafe extern "C" fn lrad_quadratic_sgd_step(
    model: *const LradQuadratic,
    theta: *mut f64,
    d: usize,
    gamma: f64,
    batch: *const f64,
    m: usize,
) -> LradStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        expect_len(model.d, d)?;
        let theta = slice_mut(theta, d, "theta")?;
        let rows: Vec<&[f64]> = slice(batch, m * d, "batch")?.chunks(d.max(1)).collect();
        let next = quad_sgd_step(model, theta, gamma, &rows)?;
        theta.copy_from_slice(&next);
        Ok(())
    })
}

/// State after `n` constant-rate steps from `theta0` given the `n x d`
/// per-step batch means, via the explicit geometric-weight formula.
///
/// # Safety
/// `theta0` and `theta_out` must hold `d` values, `means` `n * d` values.
#[no_mangle]
pub unsafe extern "C" fn lrad_quadratic_closed_form(
    model: *const LradQuadratic,
    theta0: *const f64,
    d: usize,
    gamma: f64,
    means: *const f64,
    n: usize,
    theta_out: *mut f64,
) -> LradStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        expect_len(model.d, d)?;
        let theta0 = slice(theta0, d, "theta0")?;
        let rows: Vec<&[f64]> = slice(means, n * d, "means")?.chunks(d.max(1)).collect();
        let state = closed_form_state(model, theta0, gamma, &rows)?;
        slice_mut(theta_out, d, "theta_out")?.copy_from_slice(&state);
        Ok(())
    })
}

/// Monte Carlo probability that one constant-rate step from the invariant
/// law strictly increases the loss on a fresh test batch.
///
/// # Safety
/// Handles must be live and `p` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn lrad_quadratic_increase_probability(
    model: *const LradQuadratic,
    gamma: f64,
    m: usize,
    m_test: usize,
    truncation: usize,
    n_samples: usize,
    stream: *const LradStream,
    p: *mut f64,
) -> LradStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let s = &handle(stream, "stream")?.0;
        let v = estimate_increase_probability(model, gamma, m, m_test, truncation, n_samples, s)?;
        out(p, v, "p")
    })
}

/// Run `steps` steps of the ladder rule with harmonic rates `nu1 / k`.
/// Writes the final parameters, the accumulated clock and the number of
/// steps whose test loss strictly increased.
///
/// # Safety
/// `theta0` and `theta_out` must hold `d` values; the scalar outputs must be
/// valid for writing.
#[no_mangle]
pub unsafe extern "C" fn lrad_quadratic_theorem1_run(
    model: *const LradQuadratic,
    theta0: *const f64,
    d: usize,
    nu1: f64,
    batch: usize,
    test_batch: usize,
    steps: u64,
    stream: *const LradStream,
    theta_out: *mut f64,
    clock_out: *mut f64,
    events_out: *mut u64,
) -> LradStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let s = &handle(stream, "stream")?.0;
        expect_len(model.d, d)?;
        let nu = NuSequence::harmonic(nu1)?;
        let mut sgd = Theorem1Sgd::new(model, slice(theta0, d, "theta0")?, &nu, batch, test_batch, s)?;
        let mut events = 0;
        for _ in 0..steps {
            events += u64::from(sgd.step()?.increased);
        }
        slice_mut(theta_out, d, "theta_out")?.copy_from_slice(sgd.theta());
        out(clock_out, sgd.clock(), "clock_out")?;
        out(events_out, events, "events_out")
    })
}

// networks

/// Network with layer widths `widths[0..n_widths]` (input first), the given
/// hidden activation and fan-in scaled uniform initial parameters.
///
/// # Safety
/// `widths` must hold `n_widths` values; `stream` must be live.
#[no_mangle]
pub unsafe extern "C" fn lrad_mlp_new(
    widths: *const usize,
    n_widths: usize,
    activation: LradActivation,
    stream: *mut LradStream,
    out_mlp: *mut *mut LradMlp,
) -> LradStatus {
    guard(|| {
        let act = match activation {
            LradActivation::Relu => Activation::Relu,
            LradActivation::Gelu => Activation::Gelu,
        };
        let arch = MlpArch::new(slice(widths, n_widths, "widths")?.to_vec(), act)?;
        let params = mlp_init(&arch, &mut handle_mut(stream, "stream")?.0)?;
        out(out_mlp, Box::into_raw(Box::new(LradMlp(params))), "out_mlp")
    })
}

/// # Safety
/// `mlp` must be null or a live handle from `lrad_mlp_new`.
#[no_mangle]
pub unsafe extern "C" fn lrad_mlp_free(mlp: *mut LradMlp) {
    free(mlp);
}

/// Number of scalar parameters, or 0 for a null handle.
///
/// # Safety
/// `mlp` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn lrad_mlp_param_count(mlp: *const LradMlp) -> usize {
    mlp.as_ref().map_or(0, |m| m.0.as_slice().len())
}

/// Copy the flat parameter vector (per layer: weights row-major
/// `out x in`, then biases) into `params[0..len]`.
///
/// # Safety
/// `params` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lrad_mlp_get_params(mlp: *const LradMlp, params: *mut f64, len: usize) -> LradStatus {
    guard(|| {
        let m = &handle(mlp, "mlp")?.0;
        expect_len(m.as_slice().len(), len)?;
        slice_mut(params, len, "params")?.copy_from_slice(m.as_slice());
        Ok(())
    })
}

/// # Safety
/// `params` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn lrad_mlp_set_params(mlp: *mut LradMlp, params: *const f64, len: usize) -> LradStatus {
    guard(|| {
        let m = &mut handle_mut(mlp, "mlp")?.0;
        expect_len(m.as_slice().len(), len)?;
        let src = slice(params, len, "params")?;
        if src.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()).into());
        }
        m.as_mut_slice().copy_from_slice(src);
        Ok(())
    })
}

/// Outputs for `n` row-major inputs; `outputs` receives `n x out` values.
///
/// # Safety
/// `inputs` must hold `n * in` values and `outputs` `n * out`.
#[no_mangle]
pub unsafe extern "C" fn lrad_mlp_forward(mlp: *const LradMlp, inputs: *const f64, n: usize, outputs: *mut f64) -> LradStatus {
    guard(|| {
        let m = &handle(mlp, "mlp")?.0;
        let arch = m.arch();
        let x = slice(inputs, n * arch.input_dim(), "inputs")?;
        let y = forward_batch(arch, m.as_slice(), x, n);
        slice_mut(outputs, n * arch.output_dim(), "outputs")?.copy_from_slice(&y);
        Ok(())
    })
}

/// Mean squared error over `n` samples. When `grad` is non-null it receives
/// the gradient with respect to the flat parameters; `grad_len` must then
/// equal the parameter count.
///
/// # Safety
/// `inputs` must hold `n * in` values, `targets` `n * out`, `grad`
/// `grad_len` values when non-null.
#[no_mangle]
pub unsafe extern "C" fn lrad_mlp_loss_and_grad(
    mlp: *const LradMlp,
    inputs: *const f64,
    targets: *const f64,
    n: usize,
    loss: *mut f64,
    grad: *mut f64,
    grad_len: usize,
) -> LradStatus {
    guard(|| {
        let m = &handle(mlp, "mlp")?.0;
        let arch = m.arch();
        if n == 0 {
            return Err(Error::EmptyBatch.into());
        }
        let x = slice(inputs, n * arch.input_dim(), "inputs")?;
        let y = slice(targets, n * arch.output_dim(), "targets")?;
        let g = if grad.is_null() {
            None
        } else {
            expect_len(m.as_slice().len(), grad_len)?;
            Some(slice_mut(grad, grad_len, "grad")?)
        };
        let l = mse_loss_and_grad_flat(arch, m.as_slice(), x, y, n, g);
        out(loss, l, "loss")
    })
}
