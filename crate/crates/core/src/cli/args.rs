use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use super::{run, Command, OutputFormat, ResponseColumn, RunConfig};
use crate::adaptive::Regime;
use crate::error::{Error, ErrorClass, Result};
use crate::expectile::ErrorLaw;
use crate::simgen::{DimensionRule, ModelRule, SimSpec, SparsityRule};

#[derive(Debug, Parser)]
#[command(
    name = "expectile-lasso",
    version,
    about = "Adaptive LASSO expectile regression",
    after_help = "Exit codes: 0 success, 2 parse error, 3 solver error, 4 configuration error.\n\
                  EXPECTILE_THREADS caps the number of threads used for replications."
)]
struct Cli {
    /// What to run.
    #[arg(value_enum)]
    command: Command,

    /// JSON run configuration; flags override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Input CSV with a header row.
    #[arg(long, value_name = "CSV")]
    input: Option<PathBuf>,
    /// Response column, by header name or zero-based position.
    #[arg(long, value_name = "NAME|INDEX")]
    response: Option<String>,
    /// Standardize the response before fitting.
    #[arg(long, value_enum, value_name = "on|off")]
    standardize: Option<Toggle>,

    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Penalty level; defaults to n^(-2/5).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Intervals have level 1 - alpha.
    #[arg(long)]
    alpha: Option<f64>,

    /// Sample size of a simulated cell.
    #[arg(long)]
    n: Option<usize>,
    /// Dimension: an integer, `<k>n` or `nlogn`.
    #[arg(long, value_parser = parse_dimension)]
    p: Option<DimensionRule>,
    /// Error law (for simulations and for `tau` without input).
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    /// True coefficient vector of a simulated cell.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated weight exponents for `sweep`.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    /// Also record interval coverage at level 1 - alpha in simulations.
    #[arg(long, value_name = "ALPHA")]
    coverage_alpha: Option<f64>,
    /// Keep per-replication records in JSON output.
    #[arg(long)]
    keep_records: bool,

    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    kkt_tolerance: Option<f64>,

    /// Output file (standard output when absent).
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Output format; inferred from the output extension when absent.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Auto,
    Lowdim,
    Highdim,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    /// N(0, 1).
    Normal,
    /// Exp(1) - 2.5.
    ShiftedExp,
    /// N(0, 0.04) + chi2(1).
    Mixture,
    /// No noise.
    Zero,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    /// (1, 4, -3, 5, 6, -1).
    Six,
    /// (1, 2, ..., p0) with p0 = 2 floor(sqrt n).
    SequenceSqrt,
    /// (1, 2, ..., p0) with p0 = 2 floor(n^(1/4)).
    SequenceQuartic,
    /// All ones, p0 = 2 floor(sqrt n).
    OnesSqrt,
    /// All ones, p0 = 2 floor(n^(1/4)).
    OnesQuartic,
}

fn parse_dimension(s: &str) -> std::result::Result<DimensionRule, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("nlogn") {
        return Ok(DimensionRule::NLogN);
    }
    if let Some(k) = s.strip_suffix('n') {
        return k
            .parse()
            .map(DimensionRule::TimesN)
            .map_err(|_| format!("expected <k>n, got {s:?}"));
    }
    s.parse()
        .map(DimensionRule::Fixed)
        .map_err(|_| format!("expected an integer, <k>n or nlogn, got {s:?}"))
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Auto => Regime::Auto,
            RegimeArg::Lowdim => Regime::LowDim,
            RegimeArg::Highdim => Regime::HighDim,
        }
    }
}

impl From<LawArg> for ErrorLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Normal => ErrorLaw::StdNormal,
            LawArg::ShiftedExp => ErrorLaw::shifted_exp(),
            LawArg::Mixture => ErrorLaw::normal_plus_chisq(),
            LawArg::Zero => ErrorLaw::Zero,
        }
    }
}

impl From<ModelArg> for ModelRule {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Six => ModelRule::six(),
            ModelArg::SequenceSqrt => ModelRule::Sequence(SparsityRule::TwiceSqrtN),
            ModelArg::SequenceQuartic => ModelRule::Sequence(SparsityRule::TwiceQuarticRootN),
            ModelArg::OnesSqrt => ModelRule::Ones(SparsityRule::TwiceSqrtN),
            ModelArg::OnesQuartic => ModelRule::Ones(SparsityRule::TwiceQuarticRootN),
        }
    }
}

impl Cli {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        cfg.command = self.command;

        if let Some(p) = self.input {
            cfg.input_path = Some(p);
        }
        if let Some(r) = self.response {
            cfg.response_column = ResponseColumn::Name(r);
        }
        if let Some(s) = self.standardize {
            cfg.standardize_response = Some(matches!(s, Toggle::On));
        }
        if let Some(t) = self.tau {
            cfg.tau = Some(t);
        }
        if let Some(g) = self.gamma {
            cfg.adaptive.gamma = g;
        }
        if let Some(l) = self.lambda {
            cfg.adaptive.lambda = Some(l);
        }
        if let Some(r) = self.regime {
            cfg.adaptive.regime = r.into();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = Some(a);
        }
        if let Some(l) = self.law {
            cfg.law = Some(l.into());
        }
        if let Some(g) = self.gammas {
            cfg.gammas = g;
        }
        if let Some(m) = self.max_iterations {
            cfg.solver.max_iterations = m;
        }
        if let Some(t) = self.kkt_tolerance {
            cfg.solver.kkt_tolerance = t;
        }
        if let Some(o) = self.output {
            cfg.output_path = Some(o);
        }
        if let Some(f) = self.format {
            cfg.output_format = Some(f);
        }

        if cfg.sim.is_none() {
            if let Some(n) = self.n {
                let p = self.p.ok_or_else(|| {
                    Error::Config("--n needs --p (an integer, <k>n or nlogn)".into())
                })?;
                let law = cfg.law.clone().unwrap_or(ErrorLaw::StdNormal);
                cfg.sim = Some(SimSpec::new(n, p, law));
            }
        }
        if let Some(sim) = cfg.sim.as_mut() {
            if let Some(n) = self.n {
                sim.n = n;
            }
            if let Some(p) = self.p {
                sim.p = p;
            }
            if let Some(l) = self.law {
                sim.error_law = l.into();
            }
            if let Some(m) = self.model {
                sim.model = m.into();
            }
            if let Some(s) = self.seed {
                sim.seed = s;
            }
            if let Some(r) = self.replications {
                sim.replications = r;
            }
            if let Some(g) = self.gamma {
                sim.gamma = g;
            }
            if let Some(l) = self.lambda {
                sim.lambda = Some(l);
            }
            if let Some(t) = self.tau {
                sim.tau = Some(t);
            }
            if let Some(r) = self.regime {
                sim.regime = r.into();
            }
            if let Some(a) = self.coverage_alpha {
                sim.coverage_alpha = Some(a);
            }
            if self.keep_records {
                sim.keep_records = true;
            }
        } else if self.p.is_some()
            || self.model.is_some()
            || self.seed.is_some()
            || self.replications.is_some()
        {
            return Err(Error::Config(
                "simulation flags need a cell: pass --n and --p or a config with \"sim\"".into(),
            ));
        }
        Ok(cfg)
    }
}

/// Builds the run configuration from command-line arguments (including the
/// program name).
pub fn parse_args<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    cli.into_config()
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ErrorClass::Config.exit_code()
            } else {
                0
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = cli.into_config().and_then(|cfg| run(&cfg));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.class() == ErrorClass::Config {
                eprintln!("usage: expectile-lasso <fit|simulate|sweep|tau|diagnose> [OPTIONS]; see --help");
            }
            e.exit_code()
        }
    }
}
