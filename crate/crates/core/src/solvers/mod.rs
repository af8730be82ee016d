//! Minimizers of the expectile objective
//!
//! ```text
//! F(beta) = n^-1 sum_i rho_tau(y_i - x_i^T beta) + lambda sum_j w_j |beta_j|
//! ```
//!
//! The penalty level `lambda` is the per-observation one: multiplying `F`
//! by `n` gives the `sum rho + n lambda sum w |beta|` form, so callers pass
//! the usual `lambda_n` unchanged. No intercept is added; append a constant
//! column to the design if one is wanted.

mod coordinate;
mod irls;
pub(crate) mod path;

pub use coordinate::fit_penalized;
pub use irls::fit_unpenalized;
pub use path::{fit_lasso_path, lambda_grid, lambda_max};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ExpectileParams};
use crate::error::{Error, Result};
use crate::expectile::loss::{g, rho};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Maximum number of sweeps (coordinate descent) or reweightings (IRLS).
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    pub objective_tolerance: f64,
    pub initial_beta: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            kkt_tolerance: 1e-7,
            objective_tolerance: 1e-10,
            initial_beta: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.kkt_tolerance > 0.0) || !(self.objective_tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_initial_beta(&self, beta: Vec<f64>) -> Self {
        Self {
            initial_beta: Some(beta),
            ..self.clone()
        }
    }
}

/// A dataset paired with penalty parameters.
///
/// With `lambda = 0` (or all weights zero) this is the unpenalized
/// expectile objective.
#[derive(Debug, Clone, Copy)]
pub struct PenalizedObjective<'a> {
    pub dataset: &'a Dataset,
    pub params: &'a ExpectileParams,
}

impl<'a> PenalizedObjective<'a> {
    pub fn new(dataset: &'a Dataset, params: &'a ExpectileParams) -> Result<Self> {
        if params.weights.len() != dataset.p() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for p = {}",
                params.weights.len(),
                dataset.p()
            )));
        }
        Ok(Self { dataset, params })
    }

    pub fn value(&self, beta: &[f64]) -> Result<f64> {
        objective_value(self, beta)
    }
}

pub fn objective_value(obj: &PenalizedObjective<'_>, beta: &[f64]) -> Result<f64> {
    let r = obj.dataset.residuals(beta)?;
    if obj.params.weights.len() != beta.len() {
        return Err(Error::DimensionMismatch(
            "weights and beta differ in length".into(),
        ));
    }
    Ok(objective_from_residuals(obj.params, r.as_slice(), beta))
}

pub(crate) fn objective_from_residuals(params: &ExpectileParams, r: &[f64], beta: &[f64]) -> f64 {
    loss_from_residuals(params.tau, r) + penalty(params, beta)
}

pub(crate) fn loss_from_residuals(tau: f64, r: &[f64]) -> f64 {
    r.iter().map(|&v| rho(tau, v)).sum::<f64>() / r.len() as f64
}

fn penalty(params: &ExpectileParams, beta: &[f64]) -> f64 {
    beta.iter()
        .zip(&params.weights)
        .filter(|(b, _)| **b != 0.0)
        .map(|(b, w)| params.lambda * w * b.abs())
        .sum()
}

/// Per-coordinate threshold `lambda w_j`; infinite weights pin regardless of `lambda`.
pub(crate) fn penalty_levels(params: &ExpectileParams) -> Vec<f64> {
    params
        .weights
        .iter()
        .map(|&w| {
            if w.is_infinite() {
                f64::INFINITY
            } else {
                params.lambda * w
            }
        })
        .collect()
}

/// `n^-1 sum_i g_tau(r_i) x_ij`, the negative gradient of the smooth part.
pub(crate) fn score(data: &Dataset, tau: f64, r: &[f64], j: usize) -> f64 {
    let col = data.x.column(j);
    col.iter()
        .zip(r)
        .map(|(x, &ri)| g(tau, ri) * x)
        .sum::<f64>()
        / r.len() as f64
}

pub(crate) fn kkt_violation(score: f64, beta: f64, level: f64) -> f64 {
    if beta != 0.0 {
        (score - level * beta.signum()).abs()
    } else if level.is_infinite() {
        0.0
    } else {
        (score.abs() - level).max(0.0)
    }
}

/// Largest violation of the subgradient optimality conditions at `beta`.
pub fn kkt_residual(data: &Dataset, params: &ExpectileParams, beta: &[f64]) -> Result<f64> {
    PenalizedObjective::new(data, params)?;
    let r = data.residuals(beta)?;
    let levels = penalty_levels(params);
    Ok((0..data.p())
        .map(|j| kkt_violation(score(data, params.tau, r.as_slice(), j), beta[j], levels[j]))
        .fold(0.0, f64::max))
}

/// `||n^-1 sum_i g_tau(r_i) x_i||_inf`, the unpenalized optimality gap.
pub fn gradient_norm(data: &Dataset, tau: f64, beta: &[f64]) -> Result<f64> {
    let r = data.residuals(beta)?;
    Ok((0..data.p())
        .map(|j| score(data, tau, r.as_slice(), j).abs())
        .fold(0.0, f64::max))
}

pub(crate) fn residuals_vec(data: &Dataset, beta: &[f64]) -> DVector<f64> {
    &data.y - &data.x * DVector::from_column_slice(beta)
}
