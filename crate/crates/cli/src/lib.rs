//! `crss-lab`: sweeps over the `crss-core` numerics, written as CSV tables
//! with a JSON run manifest next to them.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crss_core::CrssError;

pub use config::Params;
pub use output::{RunManifest, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid arguments: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] CrssError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Invalid(_) => EXIT_INVALID,
            LabError::Core(e) => match e {
                CrssError::Domain(_)
                | CrssError::DimensionMismatch { .. }
                | CrssError::UndefinedDirection
                | CrssError::CapExceeded { .. }
                | CrssError::Unsupported(_) => EXIT_INVALID,
                CrssError::NoConvergence { .. }
                | CrssError::IllConditioned { .. }
                | CrssError::DegenerateSteadyState { .. }
                | CrssError::Integrator(_) => EXIT_SOLVER,
            },
            LabError::Io(_) | LabError::Csv(_) | LabError::Json(_) => EXIT_IO,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Invalid(msg.into()))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AnsatzVsMin,
    AnsatzVsSteady,
}

#[derive(Debug, Parser)]
#[command(name = "crss-lab", version, about = "Coherently radiating spin state sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ansatz coefficients |a_m / a_-j|, or normalized |a_m| with the Gaussian profile.
    Coeffs {
        #[arg(long)]
        normalized: bool,
    },
    /// Numeric and analytic proximity error over a (j, r) grid, plus the r_j trace.
    Errormap,
    /// Exact steady-state squeezing against sqrt(1 - r^2) over an r grid.
    SqueezeScan,
    /// Minimal squeezing per j from exact scans and from the threshold formula.
    Minsqueeze,
    /// Infidelity maps: ansatz vs minimal-error state, or ansatz vs steady state.
    Infidelity,
    /// Dump the steady-state density matrix.
    SteadyState,
    /// One-shot report of observables at a single (j, r).
    Observables,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coeffs { .. } => "coeffs",
            Command::Errormap => "errormap",
            Command::SqueezeScan => "squeeze-scan",
            Command::Minsqueeze => "minsqueeze",
            Command::Infidelity => "infidelity",
            Command::SteadyState => "steady-state",
            Command::Observables => "observables",
        }
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct ParamArgs {
    /// Spin length (integer or half-integer).
    #[arg(long, global = true)]
    pub j: Option<f64>,
    /// Drive ratio |Omega| / Omega_c, equal to |alpha| / j.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub r_min: Option<f64>,
    #[arg(long, global = true)]
    pub r_max: Option<f64>,
    #[arg(long, global = true)]
    pub r_step: Option<f64>,
    /// Comma-separated spin lengths.
    #[arg(long, global = true, value_delimiter = ',')]
    pub j_list: Option<Vec<f64>>,
    /// Collective shift Delta.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Collective decay rate gamma.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Real drive amplitude; overrides --r where a single drive is used.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "CRSS_LAB_JOBS")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { EXIT_OK } else { EXIT_INVALID };
        }
    };
    match execute(&cli) {
        Ok(manifest) => {
            for out in &manifest.outputs {
                println!("{}", out.file);
            }
            if manifest.warnings > 0 {
                eprintln!("warning: {} cells failed and were written as NaN", manifest.warnings);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("crss-lab {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing its tables and manifest.
pub fn execute(cli: &Cli) -> Result<RunManifest> {
    let start = Instant::now();
    let mut params = config::resolve(cli.command.name(), &cli.params)?;
    if let Command::Coeffs { normalized: true } = cli.command {
        params.normalized = Some(true);
    }
    let jobs = params.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| LabError::Invalid(format!("cannot build worker pool: {e}")))?;
    let result = commands::dispatch(&cli.command, &mut params, &pool)?;
    let out_dir = params.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    output::write_run(&out_dir, cli.command.name(), &params, result, pool.current_num_threads(), start)
}
