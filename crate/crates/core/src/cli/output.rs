use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveFit, ConditionReport, Regime};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::expectile::DiagnosticsReport;
use crate::inference::InferenceReport;
use crate::simgen::SimSummary;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Six significant digits, trailing zeros dropped; for human-readable output.
pub fn fmt6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let s = format!("{:.*}", (5 - mag).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub(crate) fn csv_record(header: &[&str], values: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Config(format!("csv serialization failed: {e}"));
    w.write_record(header).map_err(fail)?;
    w.write_record(values).map_err(fail)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv serialization failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub(crate) fn summary_line(s: &SimSummary) -> String {
    format!(
        "n={} p={} p0={} law={} gamma={} lambda={}: true {}/{} false {} mae {} (active {}), {} replications, {} failed",
        s.n,
        s.p,
        s.p0,
        s.error_law,
        fmt6(s.gamma),
        fmt6(s.lambda),
        fmt6(s.mean_true_nonzero),
        s.p0,
        fmt6(s.mean_false_nonzero),
        fmt6(s.mae_all),
        fmt6(s.mae_active),
        s.replications,
        s.failures,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedCoefficient {
    /// Zero-based column position among the covariates.
    pub index: usize,
    pub label: String,
    pub coefficient: f64,
    pub std_error: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Result of the `fit` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub p: usize,
    pub tau: f64,
    pub tau_estimated: bool,
    pub lambda: f64,
    pub gamma: f64,
    pub regime: Regime,
    pub standardized: bool,
    pub selected: Vec<SelectedCoefficient>,
    /// Interval level `1 - alpha`.
    pub level: Option<f64>,
    pub var_g: Option<f64>,
    pub mean_h: Option<f64>,
    pub degenerate: Option<bool>,
    /// Why no intervals were computed (empty selection, singular design).
    pub inference_error: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub objective: f64,
    pub diagnostics: DiagnosticsReport,
    pub tuning: ConditionReport,
}

impl FitReport {
    pub fn new(
        data: &Dataset,
        fit: &AdaptiveFit,
        tau_estimated: bool,
        standardized: bool,
        inference: Result<InferenceReport>,
        diagnostics: DiagnosticsReport,
        tuning: ConditionReport,
    ) -> Self {
        let (inference, inference_error) = match inference {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let selected = fit
            .active_set()
            .iter()
            .enumerate()
            .map(|(k, &j)| {
                let se = inference.as_ref().map(|r| r.std_errors[k]);
                let ci = inference.as_ref().map(|r| r.intervals[k]);
                SelectedCoefficient {
                    index: j,
                    label: data.label(j),
                    coefficient: fit.beta()[j],
                    std_error: se,
                    lower: ci.map(|c| c.0),
                    upper: ci.map(|c| c.1),
                }
            })
            .collect();
        let f = &fit.final_fit;
        Self {
            n: data.n(),
            p: data.p(),
            tau: fit.tau_used,
            tau_estimated,
            lambda: fit.lambda_used,
            gamma: fit.gamma,
            regime: fit.regime_used,
            standardized,
            selected,
            level: inference.as_ref().map(|r| r.level),
            var_g: inference.as_ref().map(|r| r.var_g),
            mean_h: inference.as_ref().map(|r| r.mean_h),
            degenerate: inference.as_ref().map(|r| r.degenerate),
            inference_error,
            iterations: f.iterations,
            converged: f.converged,
            kkt_residual: f.kkt_residual,
            objective: f.objective,
            diagnostics,
            tuning,
        }
    }

    /// One row per selected coefficient; missing intervals are empty cells.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Config(format!("csv serialization failed: {e}"));
        w.write_record([
            "index",
            "label",
            "coefficient",
            "std_error",
            "lower",
            "upper",
        ])
        .map_err(fail)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.selected {
            w.write_record([
                s.index.to_string(),
                s.label.clone(),
                s.coefficient.to_string(),
                opt(s.std_error),
                opt(s.lower),
                opt(s.upper),
            ])
            .map_err(fail)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Config(format!("csv serialization failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "n = {}, p = {}, tau = {}{}, lambda = {}, gamma = {}, {} selected",
            self.n,
            self.p,
            fmt6(self.tau),
            if self.tau_estimated {
                " (estimated)"
            } else {
                ""
            },
            fmt6(self.lambda),
            fmt6(self.gamma),
            self.selected.len()
        );
        let width = self
            .selected
            .iter()
            .map(|s| s.label.len())
            .max()
            .unwrap_or(0)
            .max(5);
        for s in &self.selected {
            let ci = match (s.lower, s.upper) {
                (Some(lo), Some(hi)) => format!("[{}, {}]", fmt6(lo), fmt6(hi)),
                _ => "-".into(),
            };
            let se = s.std_error.map(fmt6).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "  {:<width$}  {:>12}  se {:>12}  {}",
                s.label,
                fmt6(s.coefficient),
                se,
                ci
            );
        }
        if let Some(msg) = &self.inference_error {
            let _ = writeln!(out, "  no intervals: {msg}");
        } else if self.degenerate == Some(true) {
            let _ = writeln!(out, "  residual variance is zero: intervals are degenerate");
        }
        out
    }
}
