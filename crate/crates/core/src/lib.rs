//! Learning-rate-adaptive SGD and Adam, the quadratic testbed with its
//! invariant-measure machinery, and the experiment harness built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod error;
pub mod experiments;
pub mod harness;
pub mod linalg;
pub mod network;
pub mod optim;
pub mod quadratic;
pub mod rng;

pub use error::{Error, Result};
