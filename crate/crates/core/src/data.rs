//! Domain types shared by every stage of the pipeline.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Design matrix and response of the linear model `y = X beta + eps`.
///
/// `x` is stored column-major (nalgebra's layout), which is what the
/// coordinate-descent solver wants: each coordinate update walks one column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        Self::with_names(x, y, None)
    }

    pub fn with_names(
        x: DMatrix<f64>,
        y: DVector<f64>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design must be non-empty, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "x has {n} rows but y has {} entries",
                y.len()
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "{} feature names for {p} columns",
                    names.len()
                )));
            }
        }
        if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "dataset contains non-finite values".into(),
            ));
        }
        Ok(Self {
            x,
            y,
            feature_names,
        })
    }

    /// Builds a dataset from observation rows.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(x, DVector::from_vec(y))
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Residuals `y - X beta`.
    pub fn residuals(&self, beta: &[f64]) -> Result<DVector<f64>> {
        self.check_beta(beta)?;
        let b = DVector::from_column_slice(beta);
        Ok(&self.y - &self.x * b)
    }

    pub(crate) fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "beta has length {} but p = {}",
                beta.len(),
                self.p()
            )));
        }
        Ok(())
    }

    /// Sub-dataset keeping only `columns` (in the given order).
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.p()) {
            return Err(Error::DimensionMismatch(format!(
                "column {bad} out of range for p = {}",
                self.p()
            )));
        }
        let x = self.x.select_columns(columns);
        let names = self
            .feature_names
            .as_ref()
            .map(|names| columns.iter().map(|&j| names[j].clone()).collect());
        Self::with_names(x, self.y.clone(), names)
    }

    pub fn label(&self, j: usize) -> String {
        self.feature_names
            .as_ref()
            .and_then(|names| names.get(j).cloned())
            .unwrap_or_else(|| format!("x{j}"))
    }
}

/// Parameters of the penalized expectile objective.
///
/// `lambda` is the per-observation penalty level; weights may be `+inf`,
/// which pins the coefficient at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectileParams {
    pub tau: f64,
    pub lambda: f64,
    pub gamma: f64,
    #[serde(with = "crate::serde_inf")]
    pub weights: Vec<f64>,
}

impl ExpectileParams {
    pub fn new(tau: f64, lambda: f64, gamma: f64, weights: Vec<f64>) -> Result<Self> {
        let params = Self {
            tau,
            lambda,
            gamma,
            weights,
        };
        params.validate()?;
        Ok(params)
    }

    /// Unit weights, as used by the plain LASSO.
    pub fn lasso(tau: f64, lambda: f64, p: usize) -> Result<Self> {
        Self::new(tau, lambda, 1.0, vec![1.0; p])
    }

    pub fn validate(&self) -> Result<()> {
        validate_tau(self.tau)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        for (index, &value) in self.weights.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tau must lie in (0, 1), got {tau}"
        )))
    }
}

/// Output of a single solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    /// Sorted indices `j` with `beta[j] != 0`.
    pub active_set: Vec<usize>,
    pub objective: f64,
    pub kkt_residual: f64,
    /// Sweeps (coordinate descent) or reweighting steps (IRLS).
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn new(
        beta: Vec<f64>,
        objective: f64,
        kkt_residual: f64,
        iterations: usize,
        converged: bool,
        objective_trace: Vec<f64>,
    ) -> Self {
        let active_set = support(&beta);
        Self {
            beta,
            active_set,
            objective,
            kkt_residual,
            iterations,
            converged,
            objective_trace,
        }
    }

    /// Converts a non-converged fit into [`Error::MaxIterations`].
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterations(Box::new(self)))
        }
    }
}

/// Indices of nonzero entries.
pub fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// The data-generating coefficient vector and its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub beta0: Vec<f64>,
    pub support: Vec<usize>,
    pub p0: usize,
}

impl TrueModel {
    pub fn new(beta0: Vec<f64>) -> Self {
        let support = support(&beta0);
        let p0 = support.len();
        Self { beta0, support, p0 }
    }

    /// `beta0 = (active, 0, ..., 0)` of total length `p`.
    pub fn leading(active: &[f64], p: usize) -> Result<Self> {
        if active.len() > p {
            return Err(Error::InvalidParameter(format!(
                "{} active coefficients exceed p = {p}",
                active.len()
            )));
        }
        let mut beta0 = vec![0.0; p];
        beta0[..active.len()].copy_from_slice(active);
        Ok(Self::new(beta0))
    }

    pub fn p(&self) -> usize {
        self.beta0.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_rejects_row_mismatch() {
        let x = DMatrix::zeros(3, 2);
        let y = DVector::zeros(2);
        assert!(matches!(
            Dataset::new(x, y),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn dataset_rejects_nan() {
        let x = DMatrix::from_element(2, 1, f64::NAN);
        let y = DVector::zeros(2);
        assert!(Dataset::new(x, y).is_err());
    }

    #[test]
    fn active_set_matches_nonzeros() {
        let fit = FitResult::new(vec![0.0, 1.5, 0.0, -2.0], 0.0, 0.0, 1, true, vec![]);
        assert_eq!(fit.active_set, vec![1, 3]);
    }

    #[test]
    fn true_model_support() {
        let m = TrueModel::leading(&[1.0, 4.0, -3.0], 10).unwrap();
        assert_eq!(m.support, vec![0, 1, 2]);
        assert_eq!(m.p0, 3);
        assert_eq!(m.p(), 10);
        assert!(TrueModel::leading(&[1.0; 4], 3).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ExpectileParams::new(0.0, 0.1, 1.0, vec![1.0]).is_err());
        assert!(ExpectileParams::new(0.5, -0.1, 1.0, vec![1.0]).is_err());
        assert!(ExpectileParams::new(0.5, 0.1, 0.0, vec![1.0]).is_err());
        assert!(matches!(
            ExpectileParams::new(0.5, 0.1, 1.0, vec![1.0, -1.0]),
            Err(Error::InvalidWeight { index: 1, .. })
        ));
        assert!(ExpectileParams::new(0.5, 0.1, 1.0, vec![f64::INFINITY]).is_ok());
    }
}
