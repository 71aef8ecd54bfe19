//! Counter-addressed random streams.
//!
//! A stream is identified by `(root_seed, StreamId)`. Both are packed verbatim
//! into a 256-bit ChaCha8 key, so the block function is evaluated on its own
//! counter sequence for every distinct identifier and two streams never share
//! state. Child streams re-key from a word drawn on a reserved ChaCha stream of
//! the parent, which leaves the parent's sample sequence untouched.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Purpose tags. Keep values stable: they are part of every stream key.
pub mod tag {
    pub const SEED: u16 = 1;
    pub const TRAIN: u16 = 2;
    pub const TEST: u16 = 3;
    pub const CANDIDATE: u16 = 4;
    pub const INIT: u16 = 5;
    pub const EVAL: u16 = 6;
    pub const CHI: u16 = 7;
    pub const REPLICA: u16 = 8;
    pub const THETA0: u16 = 9;
    pub const SUPERVISED: u16 = 20;
    pub const DKM_HEAT: u16 = 21;
    pub const QUADRATIC: u16 = 22;
    pub const THEORY: u16 = 23;
    pub const USER: u16 = 100;
}

const SAMPLE_STREAM: u64 = 0;
const DERIVE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub tag: u16,
    pub a: u64,
    pub b: u64,
}

impl StreamId {
    pub const fn new(tag: u16, a: u64, b: u64) -> Self {
        Self { tag, a, b }
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    root_seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

fn key(root_seed: u64, id: StreamId) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[0..8].copy_from_slice(&root_seed.to_le_bytes());
    k[8..16].copy_from_slice(&u64::from(id.tag).to_le_bytes());
    k[16..24].copy_from_slice(&id.a.to_le_bytes());
    k[24..32].copy_from_slice(&id.b.to_le_bytes());
    k
}

impl RngStream {
    pub fn new(root_seed: u64, id: StreamId) -> Self {
        let mut inner = ChaCha8Rng::from_seed(key(root_seed, id));
        inner.set_stream(SAMPLE_STREAM);
        Self { root_seed, id, inner }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Independent stream keyed by this stream's identity and `id`.
    ///
    /// Depends only on `(root_seed, self.id, id)`, never on how many samples
    /// were already drawn from `self`.
    pub fn child(&self, id: StreamId) -> RngStream {
        let mut d = ChaCha8Rng::from_seed(key(self.root_seed, self.id));
        d.set_stream(DERIVE_STREAM);
        RngStream::new(d.next_u64(), id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on the closed interval `[a, b]`. Caller guarantees `a < b`.
    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        (a + (b - a) * self.unit()).clamp(a, b)
    }

    pub fn std_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn fill_uniform(&mut self, a: f64, b: f64, out: &mut [f64]) {
        for v in out {
            *v = self.uniform(a, b);
        }
    }

    pub fn fill_std_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.std_normal();
        }
    }
}

pub fn sample_uniform_box(stream: &mut RngStream, d: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return invalid(format!("uniform box needs finite a < b, got [{a}, {b}]"));
    }
    let mut v = vec![0.0; d];
    stream.fill_uniform(a, b, &mut v);
    Ok(v)
}

pub fn sample_std_normal(stream: &mut RngStream, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    let mut v = vec![0.0; d];
    stream.fill_std_normal(&mut v);
    Ok(v)
}
