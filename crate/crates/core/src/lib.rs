//! Adaptive LASSO expectile regression for high-dimensional linear models.
//!
//! The crate is organized as a pipeline:
//!
//! * [`expectile`]: the asymmetric squared loss, error laws, the
//!   expectile-index equation and design diagnostics.
//! * [`solvers`]: IRLS for the unpenalized objective, exact coordinate
//!   descent for the weighted-L1 penalized one, and warm-started paths.
//! * [`adaptive`]: the two-stage procedure (pilot fit, adaptive weights,
//!   penalized refit) for both `p < n` and `p >= n`.
//! * [`inference`]: plug-in variance and confidence intervals for the
//!   selected coefficients.
//! * [`simgen`]: data-generating processes and the Monte Carlo harness.
//! * [`cli`]: CSV ingestion, configuration and the command implementations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod cli;
pub mod data;
pub mod error;
pub mod expectile;
pub mod inference;
mod quadrature;
mod serde_inf;
pub mod simgen;
pub mod solvers;

pub use data::{Dataset, ExpectileParams, FitResult, TrueModel};
pub use error::{Error, Result};
