//! Advisory checks of the design against the eigenvalue and boundedness
//! conditions the theory relies on. Nothing here ever fails a fit.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;

/// Eigenvalues below this are reported as near-singular.
pub const NEAR_SINGULAR_EIGENVALUE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub p: usize,
    /// Smallest eigenvalue of `X^T X / n` (`None` when `p > n`).
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    /// `max_i ||X_i||_inf`.
    pub max_abs_entry: f64,
    pub near_singular: bool,
    pub notes: Vec<String>,
}

pub fn check_assumptions(data: &Dataset) -> DiagnosticsReport {
    let (n, p) = (data.n(), data.p());
    let max_abs_entry = data.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut notes = Vec::new();
    let (mu_min, mu_max) = if p <= n {
        let gram = data.x.tr_mul(&data.x) / n as f64;
        let eig = SymmetricEigen::new(gram).eigenvalues;
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Round-off can push an exactly-zero eigenvalue slightly negative.
        (Some(lo.max(0.0)), Some(hi))
    } else {
        notes.push(format!(
            "p = {p} > n = {n}: Gram matrix is singular, eigenvalue check skipped"
        ));
        (None, None)
    };
    let near_singular = mu_min.is_some_and(|m| m < NEAR_SINGULAR_EIGENVALUE);
    if near_singular {
        notes.push(format!(
            "smallest Gram eigenvalue {:.3e} is below {NEAR_SINGULAR_EIGENVALUE:e}",
            mu_min.unwrap_or(0.0)
        ));
    }
    DiagnosticsReport {
        n,
        p,
        mu_min,
        mu_max,
        max_abs_entry,
        near_singular,
        notes,
    }
}
