//! Attribution methods for dense ReLU regression networks, explained relative
//! to a chosen reference value rather than to zero.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attribution;
pub mod datasets;
mod error;
pub mod evaluation;
pub mod model;
pub mod network;
pub mod refvalue;
pub mod seed;
pub mod selfcheck;

pub use error::{Error, Result};
