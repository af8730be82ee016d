use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{draw, SimSpec};
use crate::adaptive::{default_lambda, fit_adaptive, AdaptiveConfig};
use crate::data::TrueModel;
use crate::error::{Error, Result};
use crate::inference::confidence_intervals;
use crate::solvers::SolverConfig;

/// Caps the number of worker threads used for replications.
pub const THREADS_ENV: &str = "EXPECTILE_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    /// `Card(A and A_hat)`.
    pub true_nonzero: usize,
    /// `Card(A_hat minus A)`.
    pub false_nonzero: usize,
    /// `p^-1 sum_j |beta_hat_j - beta0_j|`.
    pub abs_error_all: f64,
    /// `p0^-1 sum_{j in A} |beta_hat_j - beta0_j|`.
    pub abs_error_active: f64,
    /// `||beta_pilot - beta0||_2`.
    pub pilot_error_l2: f64,
    pub iterations: usize,
    /// Per true-support coordinate: whether its interval covers the truth
    /// (`false` when the coordinate was not selected).
    pub covered: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub n: usize,
    pub p: usize,
    pub p0: usize,
    pub error_law: String,
    pub tau: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub replications: usize,
    /// Replications that errored; excluded from every mean below.
    pub failures: usize,
    pub failed_replications: Vec<u64>,
    pub mean_true_nonzero: f64,
    pub mean_false_nonzero: f64,
    pub pct_true_nonzero: f64,
    pub pct_false_nonzero: f64,
    pub mae_all: f64,
    pub mae_active: f64,
    pub median_pilot_error_l2: f64,
    /// Per true-support coordinate coverage rate, when requested.
    pub coverage: Option<Vec<f64>>,
    pub per_replication: Option<Vec<ReplicationRecord>>,
}

/// Runs every replication of `spec` and aggregates the selection metrics.
pub fn run_cell(spec: &SimSpec) -> Result<SimSummary> {
    spec.validate()?;
    let truth = spec.true_model()?;
    let tau = spec.tau()?;
    let lambda = spec.lambda.unwrap_or_else(|| default_lambda(spec.n));
    let cfg = AdaptiveConfig {
        gamma: spec.gamma,
        lambda: Some(lambda),
        regime: spec.regime,
        ..AdaptiveConfig::default()
    };

    let outcomes: Vec<Result<ReplicationRecord>> = with_thread_cap(|| {
        (0..spec.replications as u64)
            .into_par_iter()
            .map(|rep| replicate(spec, &truth, tau, &cfg, rep))
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    let mut failed = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("replication {rep} failed: {e}");
                failed.push(rep as u64);
            }
        }
    }
    if records.is_empty() {
        return Err(Error::AllReplicationsFailed(spec.replications));
    }
    Ok(summarize(spec, &truth, tau, lambda, records, failed))
}

/// One [`run_cell`] per `gamma`, all sharing the base seed.
pub fn run_gamma_sweep(base: &SimSpec, gammas: &[f64]) -> Result<Vec<(f64, SimSummary)>> {
    if gammas.is_empty() {
        return Err(Error::InvalidParameter("gamma list is empty".into()));
    }
    gammas
        .iter()
        .map(|&gamma| {
            let spec = SimSpec {
                gamma,
                ..base.clone()
            };
            Ok((gamma, run_cell(&spec)?))
        })
        .collect()
}

fn replicate(
    spec: &SimSpec,
    truth: &TrueModel,
    tau: f64,
    cfg: &AdaptiveConfig,
    rep: u64,
) -> Result<ReplicationRecord> {
    let data = draw(spec, truth, rep)?;
    let fit = fit_adaptive(&data, tau, cfg, &SolverConfig::default())?;
    let beta = fit.beta();
    let (p, p0) = (truth.p(), truth.p0);

    let true_nonzero = truth.support.iter().filter(|&&j| beta[j] != 0.0).count();
    let false_nonzero = fit.active_set().len() - true_nonzero;
    let abs_err = |j: usize| (beta[j] - truth.beta0[j]).abs();
    let abs_error_all = (0..p).map(abs_err).sum::<f64>() / p as f64;
    let abs_error_active = truth.support.iter().map(|&j| abs_err(j)).sum::<f64>() / p0 as f64;
    let pilot_error_l2 = fit
        .pilot_beta
        .iter()
        .zip(&truth.beta0)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();

    let covered = match spec.coverage_alpha {
        Some(alpha) if !fit.active_set().is_empty() => {
            let report = confidence_intervals(&fit, &data, alpha)?;
            Some(
                truth
                    .support
                    .iter()
                    .map(|&j| {
                        report
                            .active_set
                            .iter()
                            .position(|&a| a == j)
                            .is_some_and(|k| {
                                let (lo, hi) = report.intervals[k];
                                lo <= truth.beta0[j] && truth.beta0[j] <= hi
                            })
                    })
                    .collect(),
            )
        }
        Some(_) => Some(vec![false; p0]),
        None => None,
    };

    Ok(ReplicationRecord {
        replication: rep,
        true_nonzero,
        false_nonzero,
        abs_error_all,
        abs_error_active,
        pilot_error_l2,
        iterations: fit.final_fit.iterations,
        covered,
    })
}

fn summarize(
    spec: &SimSpec,
    truth: &TrueModel,
    tau: f64,
    lambda: f64,
    records: Vec<ReplicationRecord>,
    failed: Vec<u64>,
) -> SimSummary {
    let m = records.len() as f64;
    let mean = |f: &dyn Fn(&ReplicationRecord) -> f64| records.iter().map(f).sum::<f64>() / m;
    let mean_true_nonzero = mean(&|r| r.true_nonzero as f64);
    let mean_false_nonzero = mean(&|r| r.false_nonzero as f64);
    let (n, p0) = (spec.n, truth.p0);

    let mut pilot: Vec<f64> = records.iter().map(|r| r.pilot_error_l2).collect();
    pilot.sort_by(f64::total_cmp);
    let mid = pilot.len() / 2;
    let median_pilot_error_l2 = if pilot.len() % 2 == 1 {
        pilot[mid]
    } else {
        0.5 * (pilot[mid - 1] + pilot[mid])
    };

    let coverage = spec.coverage_alpha.map(|_| {
        (0..p0)
            .map(|k| {
                mean(&|r| {
                    r.covered
                        .as_ref()
                        .map_or(0.0, |c| f64::from(u8::from(c[k])))
                })
            })
            .collect()
    });

    SimSummary {
        n,
        p: truth.p(),
        p0,
        error_law: spec.error_law.name(),
        tau,
        gamma: spec.gamma,
        lambda,
        replications: spec.replications,
        failures: failed.len(),
        failed_replications: failed,
        mean_true_nonzero,
        mean_false_nonzero,
        pct_true_nonzero: 100.0 * mean_true_nonzero / p0 as f64,
        pct_false_nonzero: 100.0 * mean_false_nonzero / n.saturating_sub(p0).max(1) as f64,
        mae_all: mean(&|r| r.abs_error_all),
        mae_active: mean(&|r| r.abs_error_active),
        median_pilot_error_l2,
        coverage,
        per_replication: spec.keep_records.then_some(records),
    }
}

fn with_thread_cap<T: Send>(job: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&k| k > 0);
    match cap.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(job),
        None => job(),
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    n: usize,
    p: usize,
    p0: usize,
    error_law: &'a str,
    tau: f64,
    gamma: f64,
    lambda: f64,
    replications: usize,
    failures: usize,
    mean_true_nonzero: f64,
    mean_false_nonzero: f64,
    pct_true_nonzero: f64,
    pct_false_nonzero: f64,
    mae_all: f64,
    mae_active: f64,
    median_pilot_error_l2: f64,
}

/// One header row and one row per summary, in a fixed column order.
pub fn summaries_to_csv(summaries: &[SimSummary]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for s in summaries {
        writer
            .serialize(CsvRow {
                n: s.n,
                p: s.p,
                p0: s.p0,
                error_law: &s.error_law,
                tau: s.tau,
                gamma: s.gamma,
                lambda: s.lambda,
                replications: s.replications,
                failures: s.failures,
                mean_true_nonzero: s.mean_true_nonzero,
                mean_false_nonzero: s.mean_false_nonzero,
                pct_true_nonzero: s.pct_true_nonzero,
                pct_false_nonzero: s.pct_false_nonzero,
                mae_all: s.mae_all,
                mae_active: s.mae_active,
                median_pilot_error_l2: s.median_pilot_error_l2,
            })
            .map_err(|e| Error::Config(format!("csv serialization failed: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Config(format!("csv serialization failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
