//! The two-stage adaptive LASSO expectile procedure.
//!
//! Stage one computes a pilot estimate: the unpenalized expectile fit when
//! `p < n`, or a BIC-selected LASSO expectile fit when `p >= n`. Stage two
//! solves the weighted-L1 problem with weights `|pilot_j|^-gamma` (capped at
//! `sqrt(n)` in the high-dimensional regime).

use serde::{Deserialize, Serialize};

use crate::data::{validate_tau, Dataset, ExpectileParams, FitResult};
use crate::error::{Error, Result};
use crate::solvers::{self, fit_penalized, fit_unpenalized, lambda_grid, lambda_max, SolverConfig};

/// Number of points on the default pilot grid.
pub const PILOT_GRID_SIZE: usize = 50;
/// Smallest pilot penalty as a fraction of the largest.
pub const PILOT_GRID_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `LowDim` iff `p < n`.
    Auto,
    LowDim,
    HighDim,
}

impl Regime {
    pub fn resolve(self, n: usize, p: usize) -> Result<Regime> {
        match self {
            Regime::Auto if p < n => Ok(Regime::LowDim),
            Regime::Auto => Ok(Regime::HighDim),
            Regime::LowDim if p >= n => Err(Error::RegimeMismatch { n, p }),
            other => Ok(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightCap {
    SqrtN,
    Value(f64),
}

impl WeightCap {
    pub fn value(self, n: usize) -> f64 {
        match self {
            WeightCap::SqrtN => (n as f64).sqrt(),
            WeightCap::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveConfig {
    pub gamma: f64,
    /// Final-stage penalty; `None` means [`default_lambda`].
    pub lambda: Option<f64>,
    pub regime: Regime,
    /// Descending pilot grid for the high-dimensional regime. When absent,
    /// [`PILOT_GRID_SIZE`] log-spaced values from `lambda_max` down to
    /// `PILOT_GRID_RATIO * lambda_max`.
    pub pilot_lambda_grid: Option<Vec<f64>>,
    /// The pilot path stops once a fit has more nonzeros than this
    /// (default `n - 1`, i.e. at a saturated fit); such fits are never
    /// selected.
    pub pilot_max_active: Option<usize>,
    pub weight_cap: WeightCap,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            lambda: None,
            regime: Regime::Auto,
            pilot_lambda_grid: None,
            pilot_max_active: None,
            weight_cap: WeightCap::SqrtN,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "lambda must be >= 0, got {l}"
                )));
            }
        }
        if let Some(grid) = &self.pilot_lambda_grid {
            if grid.is_empty() || grid.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidParameter(
                    "pilot grid must be non-empty and strictly decreasing".into(),
                ));
            }
        }
        if let WeightCap::Value(v) = self.weight_cap {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter("weight cap must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// How the high-dimensional pilot penalty was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotSelection {
    pub lambdas: Vec<f64>,
    pub criterion: Vec<f64>,
    pub active_sizes: Vec<usize>,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveFit {
    pub pilot_beta: Vec<f64>,
    #[serde(with = "crate::serde_inf")]
    pub weights: Vec<f64>,
    #[serde(rename = "final")]
    pub final_fit: FitResult,
    pub regime_used: Regime,
    pub lambda_used: f64,
    pub tau_used: f64,
    pub gamma: f64,
    pub pilot_selection: Option<PilotSelection>,
}

impl AdaptiveFit {
    pub fn beta(&self) -> &[f64] {
        &self.final_fit.beta
    }

    pub fn active_set(&self) -> &[usize] {
        &self.final_fit.active_set
    }
}

/// `n^{-2/5}`.
pub fn default_lambda(n: usize) -> f64 {
    (n as f64).powf(-0.4)
}

/// Adaptive weights from a pilot estimate, with the `sqrt(n)` cap.
pub fn build_weights(pilot: &[f64], gamma: f64, regime: Regime, n: usize) -> Vec<f64> {
    build_weights_capped(pilot, gamma, regime, n, WeightCap::SqrtN)
}

/// `LowDim`: `|b|^-gamma`, with an exact zero pinned at `+inf`.
/// `HighDim`: `min(|b|^-gamma, cap)`, with an exact zero mapped to the cap.
/// `Auto` resolves by comparing `pilot.len()` with `n`.
pub fn build_weights_capped(
    pilot: &[f64],
    gamma: f64,
    regime: Regime,
    n: usize,
    cap: WeightCap,
) -> Vec<f64> {
    let regime = match regime {
        Regime::Auto if pilot.len() < n => Regime::LowDim,
        Regime::Auto => Regime::HighDim,
        r => r,
    };
    let cap = cap.value(n);
    pilot
        .iter()
        .map(|&b| {
            let raw = if b == 0.0 {
                f64::INFINITY
            } else {
                b.abs().powf(-gamma)
            };
            match regime {
                Regime::HighDim => raw.min(cap),
                _ => raw,
            }
        })
        .collect()
}

pub fn fit_adaptive(
    data: &Dataset,
    tau: f64,
    cfg: &AdaptiveConfig,
    solver_cfg: &SolverConfig,
) -> Result<AdaptiveFit> {
    validate_tau(tau)?;
    cfg.validate()?;
    let (n, p) = (data.n(), data.p());
    let regime = cfg.regime.resolve(n, p)?;

    let cold = SolverConfig {
        initial_beta: None,
        ..solver_cfg.clone()
    };
    let (pilot_beta, pilot_selection) = match regime {
        Regime::LowDim => (fit_unpenalized(data, tau, &cold)?.beta, None),
        _ => {
            let (fit, selection) = select_pilot(data, tau, cfg, &cold)?;
            (fit.beta, Some(selection))
        }
    };

    let weights = build_weights_capped(&pilot_beta, cfg.gamma, regime, n, cfg.weight_cap);
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(n));
    let params = ExpectileParams::new(tau, lambda, cfg.gamma, weights)?;
    let final_fit = fit_penalized(data, &params, &cold)?;

    Ok(AdaptiveFit {
        pilot_beta,
        weights: params.weights,
        final_fit,
        regime_used: regime,
        lambda_used: lambda,
        tau_used: tau,
        gamma: cfg.gamma,
        pilot_selection,
    })
}

/// `n log(n^-1 sum rho_tau(r_i)) + |A| log(n) log(log(p))`.
pub fn pilot_bic(n: usize, p: usize, loss: f64, active: usize) -> f64 {
    let n_f = n as f64;
    let loglog = (p.max(3) as f64).ln().ln();
    n_f * loss.ln() + active as f64 * n_f.ln() * loglog
}

fn select_pilot(
    data: &Dataset,
    tau: f64,
    cfg: &AdaptiveConfig,
    solver_cfg: &SolverConfig,
) -> Result<(FitResult, PilotSelection)> {
    let (n, p) = (data.n(), data.p());
    let lambdas = match &cfg.pilot_lambda_grid {
        Some(grid) => grid.clone(),
        None => {
            let top = lambda_max(data, tau, &vec![1.0; p]);
            if !(top > 0.0) {
                return Err(Error::DegenerateResponse);
            }
            lambda_grid(top, PILOT_GRID_RATIO, PILOT_GRID_SIZE)
        }
    };
    let max_active = cfg.pilot_max_active.unwrap_or(n.saturating_sub(1));
    let path = solvers::path::fit_path_until(data, tau, &lambdas, solver_cfg, max_active)?;

    let mut criterion = Vec::with_capacity(path.len());
    let mut active_sizes = Vec::with_capacity(path.len());
    for fit in &path {
        let r = data.residuals(&fit.beta)?;
        let loss = solvers::loss_from_residuals(tau, r.as_slice());
        let k = fit.active_set.len();
        active_sizes.push(k);
        criterion.push(if k > max_active {
            f64::INFINITY
        } else {
            pilot_bic(n, p, loss, k)
        });
    }
    let selected =
        criterion.iter().enumerate().fold(
            0,
            |best, (k, c)| if *c < criterion[best] { k } else { best },
        );
    let fit = path[selected].clone();
    let used = lambdas[..path.len()].to_vec();
    Ok((
        fit,
        PilotSelection {
            lambdas: used,
            criterion,
            active_sizes,
            selected,
        },
    ))
}

/// Finite-sample surrogates of the tuning conditions for selection
/// consistency. Advisory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `log p / log n`.
    pub c: f64,
    /// `lambda sqrt(p0) n^{(1-c)/2}`; should be small (`< 1`).
    pub small_surrogate: f64,
    /// `lambda n^{(1-c)(1+gamma)/2}`; should be large (`> 1`).
    pub large_surrogate: f64,
    /// `c / (1 - c)`, the lower bound on `gamma` when `p0` grows like `p`;
    /// `None` when `c >= 1`.
    pub gamma_lower_bound: Option<f64>,
    pub small_ok: bool,
    pub large_ok: bool,
    pub gamma_ok: Option<bool>,
    pub pass: bool,
    pub warnings: Vec<String>,
}

pub fn check_tuning_conditions(
    n: usize,
    p: usize,
    p0_estimate: usize,
    gamma: f64,
    lambda: f64,
) -> ConditionReport {
    let n_f = n.max(2) as f64;
    let c = (p.max(1) as f64).ln() / n_f.ln();
    let small = lambda * (p0_estimate as f64).sqrt() * n_f.powf((1.0 - c) / 2.0);
    let large = lambda * n_f.powf((1.0 - c) * (1.0 + gamma) / 2.0);
    let gamma_lower_bound = (c < 1.0).then(|| c / (1.0 - c));
    let small_ok = small < 1.0;
    let large_ok = large > 1.0;
    let gamma_ok = gamma_lower_bound.map(|b| gamma > b);

    let mut warnings = Vec::new();
    if lambda <= 0.0 {
        warnings.push(
            "lambda is zero: the penalty vanishes and no coefficient is shrunk to zero".into(),
        );
    }
    if !small_ok {
        warnings.push(format!(
            "lambda sqrt(p0) n^((1-c)/2) = {small:.4} is not small"
        ));
    }
    if !large_ok {
        warnings.push(format!(
            "lambda n^((1-c)(1+gamma)/2) = {large:.4} is not large"
        ));
    }
    match gamma_lower_bound {
        Some(b) if gamma <= b => {
            warnings.push(format!("gamma = {gamma} does not exceed c/(1-c) = {b:.4}"))
        }
        None => warnings.push(format!(
            "c = {c:.4} >= 1: p >= n, low-dimensional conditions do not apply"
        )),
        _ => {}
    }
    ConditionReport {
        c,
        small_surrogate: small,
        large_surrogate: large,
        gamma_lower_bound,
        small_ok,
        large_ok,
        gamma_ok,
        pass: warnings.is_empty(),
        warnings,
    }
}
