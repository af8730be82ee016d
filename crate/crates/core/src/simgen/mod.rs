//! Data-generating processes and the Monte Carlo harness.
//!
//! Every replication draws from its own ChaCha stream: the stream key is the
//! cell seed and the stream id is the replication index, so results do not
//! depend on thread scheduling or on which other replications ran.

mod run;

pub use run::{
    run_cell, run_gamma_sweep, summaries_to_csv, ReplicationRecord, SimSummary, THREADS_ENV,
};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adaptive::Regime;
use crate::data::{Dataset, TrueModel};
use crate::error::{Error, Result};
use crate::expectile::law::{solve_tau_for_law, ErrorLaw};

/// How `p` is derived from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum DimensionRule {
    Fixed(usize),
    /// `p = k n`.
    TimesN(usize),
    /// `p = floor(n ln n)`.
    NLogN,
}

impl DimensionRule {
    pub fn evaluate(self, n: usize) -> usize {
        match self {
            DimensionRule::Fixed(p) => p,
            DimensionRule::TimesN(k) => k * n,
            DimensionRule::NLogN => (n as f64 * (n as f64).ln()).floor() as usize,
        }
    }
}

/// How the support size grows with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityRule {
    /// `p0 = 2 floor(sqrt(n))`.
    TwiceSqrtN,
    /// `p0 = 2 floor(n^{1/4})`.
    TwiceQuarticRootN,
}

impl SparsityRule {
    pub fn evaluate(self, n: usize) -> usize {
        let n = n as f64;
        let root = match self {
            SparsityRule::TwiceSqrtN => n.sqrt(),
            SparsityRule::TwiceQuarticRootN => n.powf(0.25),
        };
        // Guard against powf landing just below an exact integer root.
        2 * (root + 1e-9).floor() as usize
    }
}

/// The true coefficients; the support is always the leading `p0` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum ModelRule {
    Leading(Vec<f64>),
    /// `(1, 2, ..., p0)`.
    Sequence(SparsityRule),
    /// `(1, ..., 1)`.
    Ones(SparsityRule),
}

impl ModelRule {
    /// The six-coefficient model used for the fixed-support experiments.
    pub fn six() -> Self {
        ModelRule::Leading(vec![1.0, 4.0, -3.0, 5.0, 6.0, -1.0])
    }

    pub fn active_coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            ModelRule::Leading(b) => b.clone(),
            ModelRule::Sequence(rule) => (1..=rule.evaluate(n)).map(|k| k as f64).collect(),
            ModelRule::Ones(rule) => vec![1.0; rule.evaluate(n)],
        }
    }
}

/// Covariate distribution. Only iid standard normal entries are provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariates {
    #[default]
    StdNormal,
}

/// One Monte Carlo cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n: usize,
    pub p: DimensionRule,
    pub model: ModelRule,
    pub error_law: ErrorLaw,
    #[serde(default)]
    pub covariates: Covariates,
    pub gamma: f64,
    /// `None` means the default `n^{-2/5}`.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// `None` means the law's own expectile index.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    pub replications: usize,
    pub seed: u64,
    /// When set, each replication also computes `1 - alpha` intervals and
    /// records which true coefficients they cover.
    #[serde(default)]
    pub coverage_alpha: Option<f64>,
    /// Keep one record per replication in the summary.
    #[serde(default)]
    pub keep_records: bool,
}

fn default_regime() -> Regime {
    Regime::Auto
}

impl SimSpec {
    /// A cell with the six-coefficient model, `gamma = 1`, default `lambda`
    /// and 100 replications.
    pub fn new(n: usize, p: DimensionRule, error_law: ErrorLaw) -> Self {
        Self {
            n,
            p,
            model: ModelRule::six(),
            error_law,
            covariates: Covariates::StdNormal,
            gamma: 1.0,
            lambda: None,
            tau: None,
            regime: Regime::Auto,
            replications: 100,
            seed: 0,
            coverage_alpha: None,
            keep_records: false,
        }
    }

    pub fn p(&self) -> usize {
        self.p.evaluate(self.n)
    }

    pub fn true_model(&self) -> Result<TrueModel> {
        TrueModel::leading(&self.model.active_coefficients(self.n), self.p())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.p() < 1 {
            return bad("p must be >= 1".into());
        }
        if self.replications < 1 {
            return bad("replications must be >= 1".into());
        }
        let active = self.model.active_coefficients(self.n);
        if active.is_empty() || active.len() > self.p() {
            return bad(format!(
                "p0 = {} must lie in [1, p = {}]",
                active.len(),
                self.p()
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda must be >= 0, got {l}"));
            }
        }
        if let Some(t) = self.tau {
            crate::data::validate_tau(t)?;
        }
        if let Some(a) = self.coverage_alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("coverage alpha must lie in (0, 1), got {a}"));
            }
        }
        self.error_law.validate()?;
        self.regime.resolve(self.n, self.p())?;
        Ok(())
    }

    /// The expectile index used for fitting.
    pub fn tau(&self) -> Result<f64> {
        match self.tau {
            Some(t) => Ok(t),
            None => solve_tau_for_law(&self.error_law),
        }
    }
}

/// Draws replication `replication_index` of `spec`: covariates first (row by
/// row), then the errors, both from the replication's own stream.
pub fn generate_dataset(
    spec: &SimSpec,
    replication_index: u64,
) -> Result<(Dataset, TrueModel, f64)> {
    spec.validate()?;
    let truth = spec.true_model()?;
    let data = draw(spec, &truth, replication_index)?;
    Ok((data, truth, spec.tau()?))
}

pub(crate) fn draw(spec: &SimSpec, truth: &TrueModel, replication_index: u64) -> Result<Dataset> {
    let (n, p) = (spec.n, truth.p());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(replication_index);
    let entries: Vec<f64> = match spec.covariates {
        Covariates::StdNormal => (0..n * p).map(|_| rng.sample(StandardNormal)).collect(),
    };
    let x = DMatrix::from_row_slice(n, p, &entries);
    let signal = &x * DVector::from_column_slice(&truth.beta0);
    let y = DVector::from_fn(n, |i, _| signal[i] + spec.error_law.sample(&mut rng));
    Dataset::new(x, y)
}
