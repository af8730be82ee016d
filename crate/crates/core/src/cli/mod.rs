//! CSV ingestion, run configuration and the command implementations behind
//! the `expectile-lasso` binary.
//!
//! Exit codes map one-to-one onto [`ErrorClass`](crate::error::ErrorClass):
//!
//! | code | class  | examples                                              |
//! |------|--------|-------------------------------------------------------|
//! | 0    |        | success                                               |
//! | 2    | parse  | unreadable file, blank or non-numeric cell, bad header |
//! | 3    | solver | singular design, no convergence, all replications failed |
//! | 4    | config | missing input, invalid flag value, regime mismatch    |

mod args;
mod csv_in;
mod output;

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::adaptive::{check_tuning_conditions, fit_adaptive, AdaptiveConfig};
use crate::error::{Error, Result};
use crate::expectile::tau::{estimate_tau_empirical, standardize};
use crate::expectile::{check_assumptions, solve_tau_for_law, ErrorLaw};
use crate::inference::confidence_intervals;
use crate::simgen::{run_cell, run_gamma_sweep, summaries_to_csv, SimSpec, SimSummary};
use crate::solvers::SolverConfig;

pub use args::{main_with_args, parse_args};
pub use csv_in::{load_csv, load_csv_from_reader, ResponseColumn};
pub use output::{fmt6, write_atomic, FitReport, SelectedCoefficient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Fit,
    Simulate,
    Sweep,
    Tau,
    Diagnose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything a command needs. A JSON config file deserializes into this
/// directly; command-line flags then override individual fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub response_column: ResponseColumn,
    /// Expectile index; estimated from the response when absent.
    pub tau: Option<f64>,
    pub adaptive: AdaptiveConfig,
    pub solver: SolverConfig,
    pub sim: Option<SimSpec>,
    /// Weight exponents for `sweep`.
    pub gammas: Vec<f64>,
    /// Error law for `tau` without an input file.
    pub law: Option<ErrorLaw>,
    /// Interval level is `1 - alpha`; 0.05 when absent.
    pub alpha: Option<f64>,
    /// Standard output when absent.
    pub output_path: Option<PathBuf>,
    /// Inferred from the output extension when absent, JSON otherwise.
    pub output_format: Option<OutputFormat>,
    /// Defaults to on for commands that read a CSV file.
    pub standardize_response: Option<bool>,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn format(&self) -> OutputFormat {
        if let Some(f) = self.output_format {
            return f;
        }
        match self.output_path.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => OutputFormat::Csv,
            _ => OutputFormat::Json,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.05)
    }

    /// Checks the per-command requirements.
    pub fn validate(&self) -> Result<()> {
        let needs_input = matches!(self.command, Command::Fit | Command::Diagnose);
        if needs_input && self.input_path.is_none() {
            return Err(Error::Config(format!(
                "{} requires an input file: pass --input <CSV> or set \"input_path\" in the config",
                self.command.name()
            )));
        }
        if matches!(self.command, Command::Simulate | Command::Sweep) {
            let sim = self.sim.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "{} requires a simulation spec: pass --n (and --p, --law, ...) or set \"sim\" in the config",
                    self.command.name()
                ))
            })?;
            sim.validate().map_err(as_config)?;
        }
        if self.command == Command::Sweep && self.gammas.is_empty() {
            return Err(Error::Config(
                "sweep requires --gammas or \"gammas\" in the config".into(),
            ));
        }
        if self.command == Command::Tau && self.input_path.is_none() && self.law.is_none() {
            return Err(Error::Config("tau requires --input <CSV> or --law".into()));
        }
        if let Some(t) = self.tau {
            crate::data::validate_tau(t).map_err(as_config)?;
        }
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        self.adaptive.validate().map_err(as_config)?;
        self.solver.validate().map_err(as_config)?;
        Ok(())
    }
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Tau => "tau",
            Command::Diagnose => "diagnose",
        }
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

/// Runs the configured command.
pub fn run(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    match cfg.command {
        Command::Fit => cmd_fit(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Tau => cmd_tau(cfg),
        Command::Diagnose => cmd_diagnose(cfg),
    }
}

fn load_input(cfg: &RunConfig) -> Result<crate::data::Dataset> {
    let path = cfg
        .input_path
        .as_ref()
        .ok_or_else(|| Error::Config("no input file".into()))?;
    let mut data = load_csv(path, &cfg.response_column)?;
    if cfg.standardize_response.unwrap_or(true) {
        data.y = DVector::from_vec(standardize(data.y.as_slice())?);
    }
    Ok(data)
}

fn emit(cfg: &RunConfig, content: &str) -> Result<()> {
    match &cfg.output_path {
        Some(path) => write_atomic(path, content.as_bytes()),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("json serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let report = fit_report(cfg)?;
    let text = match cfg.format() {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => report.to_csv()?,
    };
    emit(cfg, &text)?;
    if cfg.output_path.is_some() {
        print!("{}", report.summary_table());
    }
    Ok(())
}

/// The `fit` pipeline without the output step.
pub fn fit_report(cfg: &RunConfig) -> Result<FitReport> {
    let data = load_input(cfg)?;
    let (tau, tau_estimated) = match cfg.tau {
        Some(t) => (t, false),
        None => (estimate_tau_empirical(data.y.as_slice())?, true),
    };
    let fit = fit_adaptive(&data, tau, &cfg.adaptive, &cfg.solver)?;
    let inference = confidence_intervals(&fit, &data, cfg.alpha());
    let diagnostics = check_assumptions(&data);
    let tuning = check_tuning_conditions(
        data.n(),
        data.p(),
        fit.active_set().len().max(1),
        fit.gamma,
        fit.lambda_used,
    );
    Ok(FitReport::new(
        &data,
        &fit,
        tau_estimated,
        cfg.standardize_response.unwrap_or(true),
        inference,
        diagnostics,
        tuning,
    ))
}

fn sim_spec(cfg: &RunConfig) -> Result<&SimSpec> {
    cfg.sim
        .as_ref()
        .ok_or_else(|| Error::Config("no simulation spec".into()))
}

fn summaries_output(cfg: &RunConfig, summaries: &[SimSummary]) -> Result<String> {
    match cfg.format() {
        OutputFormat::Csv => summaries_to_csv(summaries),
        OutputFormat::Json if summaries.len() == 1 => to_json(&summaries[0]),
        OutputFormat::Json => to_json(&summaries),
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let summary = run_cell(sim_spec(cfg)?)?;
    let text = summaries_output(cfg, std::slice::from_ref(&summary))?;
    emit(cfg, &text)?;
    if cfg.output_path.is_some() {
        println!("{}", output::summary_line(&summary));
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let cells = run_gamma_sweep(sim_spec(cfg)?, &cfg.gammas)?;
    let summaries: Vec<SimSummary> = cells.into_iter().map(|(_, s)| s).collect();
    let text = summaries_output(cfg, &summaries)?;
    emit(cfg, &text)?;
    if cfg.output_path.is_some() {
        for s in &summaries {
            println!("{}", output::summary_line(s));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TauReport {
    source: String,
    tau: f64,
}

pub fn cmd_tau(cfg: &RunConfig) -> Result<()> {
    let report = match (&cfg.input_path, &cfg.law) {
        (Some(path), _) => {
            let data = load_csv(path, &cfg.response_column)?;
            TauReport {
                source: path.display().to_string(),
                tau: estimate_tau_empirical(data.y.as_slice())?,
            }
        }
        (None, Some(law)) => TauReport {
            source: law.name(),
            tau: solve_tau_for_law(law)?,
        },
        (None, None) => return Err(Error::Config("tau requires --input or --law".into())),
    };
    let text = match cfg.format() {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => output::csv_record(
            &["source", "tau"],
            &[report.source.clone(), report.tau.to_string()],
        )?,
    };
    emit(cfg, &text)?;
    if cfg.output_path.is_some() {
        println!("tau = {}", fmt6(report.tau));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct DiagnoseReport {
    diagnostics: crate::expectile::DiagnosticsReport,
    /// Size of the adaptive LASSO selection, used as the `p0` estimate.
    p0_estimate: usize,
    tuning: crate::adaptive::ConditionReport,
}

pub fn cmd_diagnose(cfg: &RunConfig) -> Result<()> {
    let data = load_input(cfg)?;
    let diagnostics = check_assumptions(&data);
    let tau = match cfg.tau {
        Some(t) => t,
        None => estimate_tau_empirical(data.y.as_slice())?,
    };
    let fit = fit_adaptive(&data, tau, &cfg.adaptive, &cfg.solver)?;
    let p0_estimate = fit.active_set().len().max(1);
    let tuning =
        check_tuning_conditions(data.n(), data.p(), p0_estimate, fit.gamma, fit.lambda_used);
    let report = DiagnoseReport {
        diagnostics,
        p0_estimate,
        tuning,
    };
    let text = match cfg.format() {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => {
            let d = &report.diagnostics;
            let t = &report.tuning;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            output::csv_record(
                &[
                    "n",
                    "p",
                    "mu_min",
                    "mu_max",
                    "max_abs_entry",
                    "near_singular",
                    "p0_estimate",
                    "c",
                    "small_surrogate",
                    "large_surrogate",
                    "pass",
                ],
                &[
                    d.n.to_string(),
                    d.p.to_string(),
                    opt(d.mu_min),
                    opt(d.mu_max),
                    d.max_abs_entry.to_string(),
                    d.near_singular.to_string(),
                    report.p0_estimate.to_string(),
                    t.c.to_string(),
                    t.small_surrogate.to_string(),
                    t.large_surrogate.to_string(),
                    t.pass.to_string(),
                ],
            )?
        }
    };
    emit(cfg, &text)?;
    if cfg.output_path.is_some() {
        let d = &report.diagnostics;
        println!(
            "n = {}, p = {}, near singular: {}, tuning conditions hold: {}",
            d.n, d.p, d.near_singular, report.tuning.pass
        );
        for note in d.notes.iter().chain(&report.tuning.warnings) {
            println!("  {note}");
        }
    }
    Ok(())
}
