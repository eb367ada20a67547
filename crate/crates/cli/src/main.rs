//! `helicarnot` command-line front end.
//!
//! Exit codes: 0 success, 1 usage / schema / I/O error, 2 domain error,
//! 3 numerical failure (including failed verification suites). Errors are
//! reported on stderr as one JSON object.

mod commands;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use helicarnot::error::ErrorKind;
use helicarnot::{Error, Tolerances};

use crate::io::SRange;

const DEFAULT_RANGE: &str = "0:6.283185307179586:101";

#[derive(Debug, Parser)]
#[command(name = "helicarnot", version, about = "Helical CR structures, step-two Carnot groups and constant-norm curves")]
pub struct Cli {
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides for the numerical thresholds (see `Tolerances`).
#[derive(Debug, Args, Default)]
pub struct TolArgs {
    #[arg(long = "tol-skew-tol", global = true, value_name = "X")]
    skew_tol: Option<f64>,
    #[arg(long = "tol-ortho-tol", global = true, value_name = "X")]
    ortho_tol: Option<f64>,
    #[arg(long = "tol-block-tol", global = true, value_name = "X")]
    block_tol: Option<f64>,
    #[arg(long = "tol-poly-tol", global = true, value_name = "X")]
    poly_tol: Option<f64>,
    #[arg(long = "tol-freq-floor", global = true, value_name = "X")]
    freq_floor: Option<f64>,
    #[arg(long = "tol-freq-sep", global = true, value_name = "X")]
    freq_sep: Option<f64>,
    #[arg(long = "tol-amp-tol", global = true, value_name = "X")]
    amp_tol: Option<f64>,
    #[arg(long = "tol-fit-tol", global = true, value_name = "X")]
    fit_tol: Option<f64>,
    #[arg(long = "tol-rat-tol", global = true, value_name = "X")]
    rat_tol: Option<f64>,
    #[arg(long = "tol-rat-denom-bound", global = true, value_name = "N")]
    rat_denom_bound: Option<u64>,
    #[arg(long = "tol-dep-tol", global = true, value_name = "X")]
    dep_tol: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Result<Tolerances, CliError> {
        let mut tol = Tolerances::default();
        let overrides = [
            ("skew_tol", self.skew_tol),
            ("ortho_tol", self.ortho_tol),
            ("block_tol", self.block_tol),
            ("poly_tol", self.poly_tol),
            ("freq_floor", self.freq_floor),
            ("freq_sep", self.freq_sep),
            ("amp_tol", self.amp_tol),
            ("fit_tol", self.fit_tol),
            ("rat_tol", self.rat_tol),
            ("rat_denom_bound", self.rat_denom_bound.map(|n| n as f64)),
            ("dep_tol", self.dep_tol),
        ];
        for (name, value) in overrides {
            if let Some(v) = value {
                if !tol.set(name, v) {
                    return Err(CliError::Usage(format!(
                        "--tol-{} must be finite and non-negative, got {v}",
                        name.replace('_', "-")
                    )));
                }
            }
        }
        Ok(tol)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the homogeneous curve gamma_m as CSV (s, g0..gm).
    Gamma {
        /// Degree m ≥ 0.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = DEFAULT_RANGE, allow_hyphen_values = true)]
        range: SRange,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a normal geodesic as CSV (s, x, t, xi, H).
    Geodesic {
        /// Algebra JSON {"m", "p", "C": [matrix, ...]}.
        #[arg(long)]
        algebra: PathBuf,
        /// Initial data JSON {"x0", "t0", "xi0", "tau0"}.
        #[arg(long)]
        ivp: PathBuf,
        #[arg(long, default_value = DEFAULT_RANGE, allow_hyphen_values = true)]
        range: SRange,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonical decomposition and injectivity verdict of a Q0 curve.
    Decompose {
        /// CSV samples with columns s, u1, ..., ud.
        #[arg(long, conflicts_with = "generator", required_unless_present = "generator")]
        samples: Option<PathBuf>,
        /// JSON {"A": matrix, "u0": [...]} for the curve exp(As)u0.
        #[arg(long)]
        generator: Option<PathBuf>,
        /// Largest number of distinct frequencies to fit (samples only;
        /// defaults to floor(d/2)).
        #[arg(long)]
        max_freqs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate between helical structures, algebras and geodesics.
    Correspond {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        input: PathBuf,
        /// Include the round-trip residual in the output.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded verification suites and write a JSON report.
    Verify {
        #[arg(long, default_value_t = helicarnot::verify::DEFAULT_SEED)]
        seed: u64,
        /// Run only these suites (repeatable).
        #[arg(long)]
        suite: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// {"A", "w"} → contact algebra.
    HelicalToGroup,
    /// {"algebra", "w"} → helical structure.
    GroupToHelical,
    /// {"curves": [Q1 curve, ...]} → algebra and distinguished geodesics.
    TupleToGroup,
    /// {"algebra", "geodesics": [ivp, ...]} → Q1 curves.
    GroupToTuple,
}

/// Everything that can end a command unsuccessfully.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Schema(String),
    Io(String),
    Library(Error),
    /// Verification ran but some suites failed.
    VerifyFailed(Vec<String>),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) | CliError::Io(_) => 1,
            CliError::Library(e) => match e.kind() {
                ErrorKind::Input => 1,
                ErrorKind::Domain => 2,
                ErrorKind::Numerical => 3,
            },
            CliError::VerifyFailed(_) => 3,
        }
    }

    fn report(&self) -> serde_json::Value {
        let (kind, name, message) = match self {
            CliError::Usage(m) => ("usage", "Usage", m.clone()),
            CliError::Schema(m) => ("schema", "Schema", m.clone()),
            CliError::Io(m) => ("io", "Io", m.clone()),
            CliError::Library(e) => {
                let kind = match e.kind() {
                    ErrorKind::Input => "input",
                    ErrorKind::Domain => "domain",
                    ErrorKind::Numerical => "numerical",
                };
                (kind, e.name(), e.to_string())
            }
            CliError::VerifyFailed(s) => ("verification", "SuitesFailed", s.join(", ")),
        };
        serde_json::json!({ "error": name, "kind": kind, "message": message })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code())
        }
    }
}
