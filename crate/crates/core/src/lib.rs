//! Sharp one-dimensional convex-order comparison constants for sub-Gaussian
//! and sub-exponential tail envelopes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod comparison;
pub mod discrete;
pub mod envelope;
pub mod error;
pub mod extremal;
pub mod numerics;
pub mod stream;
pub mod tensorize;
pub mod verifier;

pub use error::{Error, Result};
