use crate::error::{invalid, Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Partial sums of the learning rates, answering `N_t = inf { n : sum_{k<=n} gamma_k >= t }`.
///
/// Partial sums are accumulated with compensation, so e.g. ten steps of `0.1`
/// reach exactly `1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NtClock {
    acc: CompensatedSum,
    partial: Vec<f64>,
}

impl Default for NtClock {
    fn default() -> Self {
        Self::new()
    }
}

impl NtClock {
    pub fn new() -> Self {
        Self { acc: CompensatedSum::default(), partial: vec![0.0] }
    }

    pub fn from_rates(rates: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut c = Self::new();
        for g in rates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gamma: f64) -> Result<()> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return invalid(format!("clock increments must be finite and nonnegative, got {gamma}"));
        }
        self.acc.add(gamma);
        // monotone even if compensation wobbles in the last bit
        let v = self.acc.value().max(*self.partial.last().unwrap());
        self.partial.push(v);
        Ok(())
    }

    /// Number of recorded steps.
    pub fn len(&self) -> usize {
        self.partial.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `sum_{k <= n} gamma_k`
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.partial[n]
    }

    pub fn total(&self) -> f64 {
        *self.partial.last().unwrap()
    }

    pub fn lookup(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return invalid(format!("clock time must be nonnegative, got {t}"));
        }
        if t > self.total() {
            return Err(Error::HorizonNotReached { requested: t, reached: self.total() });
        }
        Ok(self.partial.partition_point(|s| *s < t))
    }
}

pub fn nt_lookup(clock: &NtClock, t: f64) -> Result<usize> {
    clock.lookup(t)
}
