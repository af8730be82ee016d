//! Plug-in standard errors and Wald intervals for the selected coefficients.
//!
//! Conditional on the selected set `A`, the nonzero block is asymptotically
//! normal with covariance `Var[g(eps)] / E[h(eps)]^2 * U_A^{-1} / n`, where
//! `U_A = n^-1 sum_i x_{i,A} x_{i,A}^T`. The moments are estimated from the
//! residuals of an unpenalized refit on `A`, so shrinkage bias does not leak
//! into the variance estimate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptiveFit;
use crate::data::{validate_tau, Dataset};
use crate::error::{Error, Result};
use crate::expectile::loss::{g, h};
use crate::solvers::{fit_unpenalized, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub active_set: Vec<usize>,
    pub u_matrix: DMatrix<f64>,
    pub var_g: f64,
    pub mean_h: f64,
    pub estimates: Vec<f64>,
    /// Unpenalized expectile fit restricted to `active_set`.
    pub refit: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    /// Confidence level `1 - alpha`.
    pub level: f64,
    /// The refit interpolates the data (`var_g` is zero up to rounding
    /// relative to the response scale): the intervals collapse to points.
    pub degenerate: bool,
}

/// `var_g` below this multiple of the mean squared response counts as zero.
pub const DEGENERATE_RATIO: f64 = 1e-20;

/// `U = n^-1 X_A^T X_A`.
pub fn compute_u_matrix(data: &Dataset, active: &[usize]) -> Result<DMatrix<f64>> {
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let xa = data.select_columns(active)?.x;
    let mut u = xa.tr_mul(&xa) / data.n() as f64;
    // Mirror the upper triangle so the result is exactly symmetric.
    for i in 0..u.nrows() {
        for j in 0..i {
            u[(i, j)] = u[(j, i)];
        }
    }
    Ok(u)
}

/// Sample variance (`n - 1` denominator) of `g_tau(r_i)` and sample mean of
/// `h_tau(r_i)`.
pub fn plugin_moments(residuals: &[f64], tau: f64) -> Result<(f64, f64)> {
    validate_tau(tau)?;
    let n = residuals.len();
    if n < 2 {
        return Err(Error::TooFewResiduals(n));
    }
    let gs: Vec<f64> = residuals.iter().map(|&r| g(tau, r)).collect();
    let mean_g = gs.iter().sum::<f64>() / n as f64;
    let var_g = gs.iter().map(|v| (v - mean_g).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mean_h = residuals.iter().map(|&r| h(tau, r)).sum::<f64>() / n as f64;
    Ok((var_g, mean_h))
}

/// Wald intervals `beta_j +- z_{1-alpha/2} se_j` for every selected coefficient.
///
/// A singular restricted design (including `|A| >= n`) is reported as
/// [`Error::SingularU`]; zero residual variance gives a flagged report.
pub fn confidence_intervals(
    fit: &AdaptiveFit,
    data: &Dataset,
    alpha: f64,
) -> Result<InferenceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    data.check_beta(fit.beta())?;
    let active = fit.active_set().to_vec();
    let u = compute_u_matrix(data, &active)?;
    let u_inv = u.clone().cholesky().ok_or(Error::SingularU)?.inverse();

    let tau = fit.tau_used;
    let sub = data.select_columns(&active)?;
    let refit = match fit_unpenalized(&sub, tau, &SolverConfig::default()) {
        Ok(f) => f.beta,
        Err(Error::SingularDesign) => return Err(Error::SingularU),
        Err(e) => return Err(e),
    };
    let r = &sub.y - &sub.x * DVector::from_column_slice(&refit);
    let (var_g, mean_h) = plugin_moments(r.as_slice(), tau)?;

    let z = normal_quantile(1.0 - alpha / 2.0);
    let scale = var_g.sqrt() / mean_h / (data.n() as f64).sqrt();
    let estimates: Vec<f64> = active.iter().map(|&j| fit.beta()[j]).collect();
    let std_errors: Vec<f64> = (0..active.len())
        .map(|k| u_inv[(k, k)].sqrt() * scale)
        .collect();
    let intervals = estimates
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| (b - z * se, b + z * se))
        .collect();

    Ok(InferenceReport {
        active_set: active,
        u_matrix: u,
        var_g,
        mean_h,
        estimates,
        refit,
        std_errors,
        intervals,
        level: 1.0 - alpha,
        degenerate: var_g <= DEGENERATE_RATIO * data.y.norm_squared() / data.n() as f64,
    })
}

/// Inverse standard normal CDF.
///
/// Peter Acklam's rational approximation (relative error below 1.15e-9 over
/// the whole range), without the refinement step.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        let q = (-2.0 * q.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}
