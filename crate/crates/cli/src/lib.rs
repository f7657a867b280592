//! `gframe`: run the g-frame checks on JSON frame files and report the results.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 input error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gframe_core::format::{parse_complex, parse_complex_list};
use gframe_core::{Complex64, Error, Tolerances};

pub mod report;
pub mod suites;

pub use report::{Provenance, Report};
pub use suites::{CoherentArgs, CoherentCheck, Options, PerturbArgs, Subject};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, message: String },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                Error::NonFinite
                | Error::NotSquare { .. }
                | Error::NotHermitian { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NotUnitary { .. }
                | Error::Singular { .. }
                | Error::NotADual { .. }
                | Error::DegenerateTheta => 3,
                _ => 2,
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Core(e) => (e.kind(), e.to_string()),
            CliError::Io { path, message } => ("IoError", format!("{}: {message}", path.display())),
        };
        let mut obj = serde_json::json!({
            "kind": kind,
            "message": message,
            "exit_code": self.exit_code(),
        });
        let extra = match self {
            CliError::Core(Error::Parse { line, column, .. }) => serde_json::json!({"line": line, "column": column}),
            CliError::Core(Error::Schema { field, .. }) => serde_json::json!({"field": field}),
            CliError::Core(Error::TruncationTooSevere { required_k, required_l, .. }) => {
                serde_json::json!({"required_k": required_k, "required_l": required_l})
            }
            CliError::Core(Error::InsufficientNodes { required_radial, required_angular }) => {
                serde_json::json!({"required_radial": required_radial, "required_angular": required_angular})
            }
            CliError::Io { path, .. } => serde_json::json!({"path": path.display().to_string()}),
            _ => serde_json::json!({}),
        };
        if let (Some(o), Some(e)) = (obj.as_object_mut(), extra.as_object()) {
            o.extend(e.clone());
        }
        serde_json::json!({ "error": obj })
    }
}

fn complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

/// Comma-separated complex vector given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexList(pub Vec<Complex64>);

fn complex_list_arg(s: &str) -> Result<ComplexList, String> {
    parse_complex_list(s).map(ComplexList).map_err(|e| e.to_string())
}

fn tolerance_arg(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("tolerance must be a positive number, got {s:?}")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "gframe", version, about = "Check g-frame properties of JSON frame files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Relative tolerance for operator identities.
    #[arg(long, global = true, env = "GFRAME_TOL", value_parser = tolerance_arg)]
    pub tol: Option<f64>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Random vectors per sampled check.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub samples: usize,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tabular text instead of JSON.
    #[arg(long, global = true)]
    pub human: bool,
}

#[derive(Debug, Args)]
pub struct CoherentFlags {
    /// First label, e.g. `0.5+0.1i`.
    #[arg(long, default_value = "0", value_parser = complex_arg, allow_hyphen_values = true)]
    pub z: Complex64,
    /// Second label.
    #[arg(long, default_value = "0", value_parser = complex_arg, allow_hyphen_values = true)]
    pub w: Complex64,
    /// Expected rows per block; must match the file.
    #[arg(long = "K")]
    pub levels: Option<usize>,
    /// Expected number of blocks; must match the file.
    #[arg(long = "L")]
    pub blocks: Option<usize>,
    /// Radial Gauss–Laguerre nodes (default: exactness threshold).
    #[arg(long)]
    pub radial: Option<usize>,
    /// Angular nodes (default: exactness threshold).
    #[arg(long)]
    pub angular: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Identity,
    Eigen,
    Uncertainty,
    Bicoherent,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bounds, classification and frame inequality.
    Classify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Canonical dual and its identities.
    Dual {
        file: PathBuf,
        /// Write the canonical dual as a frame file.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// A non-canonical dual of a redundant frame.
    AltDual {
        file: PathBuf,
        /// Probe vector, comma separated (default: first basis vector).
        #[arg(long, value_parser = complex_list_arg, allow_hyphen_values = true)]
        g0: Option<ComplexList>,
        /// Write the alternate dual as a frame file.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Closeness constants between a frame and a perturbation of it.
    Perturb {
        reference: PathBuf,
        perturbed: PathBuf,
        /// Test `‖f − Vf‖ ≤ m‖f‖ + n‖Vf‖` with this `m`.
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        n: f64,
    },
    /// Coherent states of a g-orthonormal or g-Riesz basis.
    Coherent {
        file: PathBuf,
        #[command(flatten)]
        flags: CoherentFlags,
        #[arg(long, value_enum, default_value = "all")]
        check: CheckArg,
    },
    /// Every applicable suite; two same-shaped files also get `perturb`.
    All {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        flags: CoherentFlags,
    },
}

fn coherent_args(flags: &CoherentFlags, check: CheckArg) -> CoherentArgs {
    CoherentArgs {
        z: flags.z,
        w: flags.w,
        levels: flags.levels,
        blocks: flags.blocks,
        check: match check {
            CheckArg::Identity => CoherentCheck::Identity,
            CheckArg::Eigen => CoherentCheck::Eigen,
            CheckArg::Uncertainty => CoherentCheck::Uncertainty,
            CheckArg::Bicoherent => CoherentCheck::Bicoherent,
            CheckArg::All => CoherentCheck::All,
        },
        radial: flags.radial,
        angular: flags.angular,
    }
}

pub fn options(global: &GlobalArgs) -> Options {
    let tol = match global.tol {
        Some(eq) => Tolerances::with_eq(eq),
        None => Tolerances::default(),
    };
    Options {
        tol,
        seed: global.seed,
        samples: global.samples,
    }
}

/// Runs one command and returns its reports.
pub fn run_suite(command: &Command, opts: &Options) -> Result<Vec<Report>, CliError> {
    match command {
        Command::Classify { files } => files
            .iter()
            .map(|p| suites::classify(&suites::load(p)?, opts))
            .collect(),
        Command::Dual { file, emit } => Ok(vec![suites::dual(&suites::load(file)?, emit.as_ref(), opts)?]),
        Command::AltDual { file, g0, emit } => Ok(vec![suites::alt_dual(
            &suites::load(file)?,
            g0.as_ref().map(|v| &v.0[..]),
            emit.as_ref(),
            opts,
        )?]),
        Command::Perturb { reference, perturbed, m, n } => {
            let args = PerturbArgs { m: *m, n: *n };
            Ok(vec![suites::perturb(&suites::load(reference)?, &suites::load(perturbed)?, args, opts)?])
        }
        Command::Coherent { file, flags, check } => Ok(vec![suites::coherent(
            &suites::load(file)?,
            &coherent_args(flags, *check),
            opts,
        )?]),
        Command::All { files, flags } => {
            let subjects = files.iter().map(|p| suites::load(p)).collect::<Result<Vec<_>, _>>()?;
            let args = coherent_args(flags, CheckArg::All);
            let mut reports = subjects
                .iter()
                .map(|s| suites::all(s, &args, opts))
                .collect::<Result<Vec<_>, _>>()?;
            if let [a, b] = &subjects[..] {
                if a.frame.same_shape(&b.frame) {
                    reports.push(suites::perturb(a, b, PerturbArgs { m: None, n: 0.0 }, opts)?);
                }
            }
            Ok(reports)
        }
    }
}

/// Parses arguments, runs, writes the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let opts = options(&cli.global);
    let result = run_suite(&cli.command, &opts).and_then(|reports| {
        let text = if cli.global.human {
            report::to_human(&reports)
        } else {
            report::to_json(&reports)
        };
        match &cli.global.out {
            Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?,
            None => print!("{text}"),
        }
        Ok(reports.iter().all(|r| r.passed))
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
