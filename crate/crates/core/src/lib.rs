#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Approximate Bayesian computation under model uncertainty.
//!
//! Samplers target the joint density of parameters θ and the per-summary error
//! vector ε = S(x) - S(x0), so that the error marginal can be inspected for
//! evidence of model mismatch.

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod model;
pub mod models;
pub mod oracles;
pub mod rng;
pub mod samplers;

pub use error::{AbcError, Result};
pub use exec::Execution;
