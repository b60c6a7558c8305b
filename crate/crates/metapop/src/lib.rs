//! Multi-patch SEIR-family epidemics with general period laws and Markovian migration:
//! exact event simulation, the deterministic Volterra fluid limit, and the Gaussian
//! fluctuation limit.

// Index loops mirror the patch-by-patch sums; `!(x > 0.0)` forms reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fclt;
pub mod fluid;
pub mod migration;
pub mod model;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
