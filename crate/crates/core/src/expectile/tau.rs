use crate::error::{Error, Result};
use crate::expectile::law::{empirical_partial_means, tau_from_partial_means};

/// Centers `y` at its mean and scales by the sample standard deviation.
pub fn standardize(y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 2 {
        return Err(Error::DegenerateResponse);
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateResponse);
    }
    Ok(y.iter().map(|v| (v - mean) / sd).collect())
}

/// Empirical expectile index of a response sample, computed on the
/// standardized values: the sample analogue of
/// `E[y 1{y<0}] / E[y (1{y<0} - 1{y>0})]`.
///
/// Standardized values sum to zero, so the negative and positive partial
/// sums cancel and the estimate equals 1/2 up to rounding for every sample.
pub fn estimate_tau_empirical(y: &[f64]) -> Result<f64> {
    let z = standardize(y)?;
    let (neg, pos) = empirical_partial_means(&z);
    // Standardized data with positive variance always has both signs.
    tau_from_partial_means(neg, pos).ok_or(Error::DegenerateResponse)
}
