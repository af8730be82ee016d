use super::{fit_penalized, SolverConfig};
use crate::data::{validate_tau, Dataset, ExpectileParams, FitResult};
use crate::error::{Error, Result};
use crate::expectile::loss::g;

/// Smallest `lambda` at which `beta = 0` satisfies the KKT conditions:
/// `max_j |n^-1 sum_i g_tau(y_i) x_ij| / w_j`. Coordinates with infinite
/// weight are ignored; a zero weight yields `+inf`.
pub fn lambda_max(data: &Dataset, tau: f64, weights: &[f64]) -> f64 {
    let n = data.n() as f64;
    let gy: Vec<f64> = data.y.iter().map(|&v| g(tau, v)).collect();
    data.x
        .column_iter()
        .zip(weights)
        .filter(|(_, w)| w.is_finite())
        .map(|(col, &w)| {
            let s = col.iter().zip(&gy).map(|(x, gi)| x * gi).sum::<f64>() / n;
            if s == 0.0 {
                0.0
            } else {
                s.abs() / w
            }
        })
        .fold(0.0, f64::max)
}

/// `count` log-spaced values from `start` down to `start * ratio`.
pub fn lambda_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = ratio.ln() / (count - 1) as f64;
            (0..count)
                .map(|k| start * (step * k as f64).exp())
                .collect()
        }
    }
}

/// Unit-weight LASSO expectile fits along a strictly decreasing `lambdas`
/// sequence, each warm-started from the previous solution.
pub fn fit_lasso_path(
    data: &Dataset,
    tau: f64,
    lambdas: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<FitResult>> {
    validate_tau(tau)?;
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda sequence".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite())
        || lambdas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(
            "lambdas must be positive and strictly decreasing".into(),
        ));
    }
    fit_path_until(data, tau, lambdas, cfg, usize::MAX)
}

/// As [`fit_lasso_path`], but stops after the first fit with more than
/// `max_active` nonzeros (that fit is included).
pub(crate) fn fit_path_until(
    data: &Dataset,
    tau: f64,
    lambdas: &[f64],
    cfg: &SolverConfig,
    max_active: usize,
) -> Result<Vec<FitResult>> {
    let p = data.p();
    let mut start = cfg.initial_beta.clone().unwrap_or_else(|| vec![0.0; p]);
    let mut fits = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let params = ExpectileParams::lasso(tau, lambda, p)?;
        let fit = fit_penalized(data, &params, &cfg.with_initial_beta(start))?;
        start = fit.beta.clone();
        let stop = fit.active_set.len() > max_active;
        fits.push(fit);
        if stop {
            break;
        }
    }
    Ok(fits)
}
