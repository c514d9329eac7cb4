//! Command-line front end.
//!
//! Exit status: 0 when every verdict is in the class the command expects,
//! 1 when a verdict is not, 2 on configuration or input errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::fixtures::resolve_law;
use crate::harness::{self, Budget, Verdict, DEFAULT_SAMPLES, DEFAULT_TOL_SIGMA};
use crate::heat_flow::{entropy_via_debruijn, MIN_NODES};
use crate::linalg::{balanced_projection, ProjectionMethod};

pub const THREADS_ENV: &str = "SYMENTROPY_THREADS";
pub const MAX_SAMPLES: usize = 1_000_000_000;
pub const MAX_NODES: usize = 1024;
pub const MAX_RESOLUTION: usize = 100_000;

#[derive(Debug, Parser)]
#[command(name = "symentropy", version, about = "Entropy inequalities for symmetric random vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Mixture JSON file or `builtin:<name>`.
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo samples per estimate.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Decision threshold in standard errors.
    #[arg(long, default_value_t = DEFAULT_TOL_SIGMA)]
    pub tol_sigma: f64,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// h(Σ Xᵢ/√n) ≥ h(X)/n on a symmetric law.
    Verify(Common),
    /// Two-dimensional equality case built from a one-dimensional base.
    EqualityDemo(Common),
    /// Main gap and independence relations on a law with n ≥ 3.
    Probe(Common),
    /// h(AX) ≥ (k/n) h(X) for a balanced k×n projection.
    Kdim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        /// Expected dimension of the law.
        #[arg(long)]
        n: Option<usize>,
        /// hadamard or frequency_pairs.
        #[arg(long, default_value = "hadamard")]
        method: String,
    },
    /// Entropy from the heat-flow integral of Fisher information.
    Debruijn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
    /// Projected entropy and directional bound over a grid of directions.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 90)]
        resolution: usize,
    },
    /// Correlated Gaussian that violates the inequality.
    Counterexample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -0.9, allow_hyphen_values = true)]
        rho: f64,
    },
    /// Closed-form Gaussian checks of every estimator.
    Calibrate(Common),
}

/// Reported as exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument { .. } => ConfigError(e.to_string()),
            Error::NotSymmetric(_) | Error::NotSymmetricBase(_) => config(
                "law",
                format!("{e}; admissible: laws invariant under coordinate sign flips (violation <= 1e-9)"),
            ),
            Error::UnsupportedShape { .. } => config(
                "k",
                format!("{e}; admissible: hadamard with k = 1 or n a power of two, frequency_pairs with k even and k < n"),
            ),
            Error::UnsupportedDimension(_) => config("law", format!("{e}; admissible dimensions: 2..=3")),
            Error::DimensionTooSmall { .. } | Error::NotUnivariate(_) | Error::DimensionMismatch { .. } => {
                config("law", e)
            }
            other => config("law", other),
        }
    }
}

fn config(field: &str, message: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("invalid argument `{field}`: {message}"))
}

impl Common {
    fn budget(&self) -> std::result::Result<Budget, ConfigError> {
        if !(100..=MAX_SAMPLES).contains(&self.samples) {
            return Err(config(
                "samples",
                format!("{} is outside the admissible range 100..={MAX_SAMPLES}", self.samples),
            ));
        }
        if !(self.tol_sigma > 0.0 && self.tol_sigma.is_finite()) {
            return Err(config(
                "tol-sigma",
                format!("{} must be a finite number > 0", self.tol_sigma),
            ));
        }
        Ok(Budget {
            samples: self.samples,
            seed: self.seed,
            tol_sigma: self.tol_sigma,
        })
    }

    fn law(&self, default: Option<&str>) -> std::result::Result<crate::GaussianMixture, ConfigError> {
        let spec = self.law.as_deref().or(default).ok_or_else(|| {
            config("law", "required: a mixture JSON path or builtin:<name>")
        })?;
        Ok(resolve_law(spec)?)
    }

    fn json_only(&self) -> std::result::Result<(), ConfigError> {
        if self.format == Some(Format::Csv) {
            return Err(config("format", "csv is only available for `scan`; use json"));
        }
        Ok(())
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

fn emit(common: &Common, text: String) -> std::result::Result<(), ConfigError> {
    match &common.out {
        Some(path) => write_atomic(path, text.as_bytes())
            .map_err(|e| config("out", format!("cannot write `{}`: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| config("out", format!("cannot write to standard output: {e}")))
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn status(ok: bool) -> i32 {
    if ok {
        0
    } else {
        1
    }
}

/// Configures the worker pool from [`THREADS_ENV`].
pub fn init_threads() -> std::result::Result<(), ConfigError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match value.trim().parse() {
        Ok(t) if t >= 1 => t,
        _ => {
            return Err(ConfigError(format!(
                "invalid environment variable {THREADS_ENV}={value:?}: must be an integer >= 1"
            )))
        }
    };
    // a pool that is already configured keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Runs one command and returns the exit status.
pub fn run(cli: Cli) -> std::result::Result<i32, ConfigError> {
    init_threads()?;
    match cli.command {
        Command::Verify(common) => {
            common.json_only()?;
            let budget = common.budget()?;
            let report = harness::verify_main(&common.law(None)?, &budget)?;
            emit(&common, json(&report))?;
            Ok(status(report.verdict.holds()))
        }
        Command::EqualityDemo(common) => {
            common.json_only()?;
            let budget = common.budget()?;
            let report = harness::equality_demo_n2(&common.law(Some("builtin:bimodal"))?, &budget)?;
            emit(&common, json(&report))?;
            Ok(status(report.verdict == Verdict::HoldsWithEquality && report.z_independent))
        }
        Command::Probe(common) => {
            common.json_only()?;
            let budget = common.budget()?;
            let report = harness::gaussianity_probe(&common.law(None)?, &budget)?;
            emit(&common, json(&report))?;
            Ok(status(report.main.verdict.holds()))
        }
        Command::Kdim { common, k, n, method } => {
            common.json_only()?;
            let budget = common.budget()?;
            let law = common.law(None)?;
            let dim = law.dim();
            if let Some(n) = n {
                if n != dim {
                    return Err(config("n", format!("{n} does not match the law dimension {dim}")));
                }
            }
            if !(1..=dim).contains(&k) {
                return Err(config("k", format!("{k} is outside the admissible range 1..={dim}")));
            }
            let method: ProjectionMethod = method.parse()?;
            let a = balanced_projection(k, dim, method)?;
            let report = harness::verify_kdim(&law, &a, &budget)?;
            emit(&common, json(&report))?;
            Ok(status(report.verdict.holds()))
        }
        Command::Debruijn { common, nodes } => {
            common.json_only()?;
            let budget = common.budget()?;
            if !(MIN_NODES..=MAX_NODES).contains(&nodes) {
                return Err(config(
                    "nodes",
                    format!("{nodes} is outside the admissible range {MIN_NODES}..={MAX_NODES}"),
                ));
            }
            let law = common.law(None)?;
            let estimate = entropy_via_debruijn(&law, nodes, budget.samples, budget.seed)?;
            #[derive(Serialize)]
            struct Report {
                #[serde(flatten)]
                estimate: crate::heat_flow::DebruijnEstimate,
                law_fingerprint: String,
                seed: u64,
                budget: Budget,
            }
            emit(
                &common,
                json(&Report {
                    estimate,
                    law_fingerprint: law.fingerprint(),
                    seed: budget.seed,
                    budget,
                }),
            )?;
            Ok(0)
        }
        Command::Scan { common, resolution } => {
            let budget = common.budget()?;
            if !(1..=MAX_RESOLUTION).contains(&resolution) {
                return Err(config(
                    "resolution",
                    format!("{resolution} is outside the admissible range 1..={MAX_RESOLUTION}"),
                ));
            }
            let table = harness::direction_scan(&common.law(None)?, resolution, &budget)?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Csv => table.to_csv(),
                Format::Json => json(&table),
            };
            emit(&common, text)?;
            Ok(status(table.all_within(budget.tol_sigma)))
        }
        Command::Counterexample { common, rho } => {
            common.json_only()?;
            if !(rho > -1.0 && rho < 1.0) {
                return Err(config("rho", format!("{rho} is outside the admissible range (-1, 1)")));
            }
            let report = harness::asymmetric_counterexample(rho)?;
            emit(&common, json(&report))?;
            Ok(status(report.verdict == Verdict::Violated))
        }
        Command::Calibrate(common) => {
            common.json_only()?;
            let budget = common.budget()?;
            let report = harness::calibrate(&budget)?;
            emit(&common, json(&report))?;
            Ok(status(report.pass))
        }
    }
}

/// Parses `args`, runs, and maps errors to exit status 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(ConfigError(message)) => {
            eprintln!("error: {message}");
            2
        }
    }
}
