//! Library side of the `chaoslink` binary: argument parsing, scenario files,
//! the `fit`/`curve` commands and the bundled validation suite.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod fixtures;
pub mod scenario;
pub mod validate;

pub use scenario::ScenarioFile;

/// Environment variable consulted when no seed is given on the command line or in the scenario.
pub const SEED_ENV: &str = "CHAOSLINK_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration.
    Usage(String),
    /// A computation failed (non-convergence, truncation, out-of-domain value).
    Numeric(String),
    /// The validation suite ran and at least one criterion failed.
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Validation(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<chaoslink::Error> for CliError {
    fn from(e: chaoslink::Error) -> Self {
        match e {
            chaoslink::Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chaoslink", version, about = "DCSK relay error rates: fits, curves and validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed (falls back to the scenario file, then CHAOSLINK_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per SNR point.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Truncation tolerance of the gamma-sum series.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an exponential-sum approximation of the DCSK kernel.
    Fit(FitArgs),
    /// Evaluate BER curves for a scenario file.
    Curve(CurveArgs),
    /// Run the acceptance suite and write a JSON report.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Noise shape parameter.
    #[arg(long)]
    pub a: f64,
    /// Half spreading factor.
    #[arg(long = "M")]
    pub m: u32,
    #[arg(long, default_value_t = 4)]
    pub terms: usize,
    /// Fit grid as lo:hi:points in dB.
    #[arg(long = "grid-db", default_value = "0:25:200")]
    pub grid_db: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Analytic,
    Mc,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    /// Simulate the same exponential sum the closed form uses.
    Approx,
    /// Simulate the exact generalized-Q kernel.
    Exact,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Analytic)]
    pub mode: Mode,
    /// Approximation JSON; overrides the scenario's `params`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Kernel averaged by the simulator.
    #[arg(long, value_enum, default_value_t = KernelChoice::Approx)]
    pub kernel: KernelChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Directory with `table.json` and `scenarios/*.json`; built-in fixtures otherwise.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Run only these criteria (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Seed from the flag, then the scenario file, then `CHAOSLINK_SEED`, then `default`.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>, default: u64) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a 64-bit unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(default),
        Err(e) => Err(CliError::Usage(format!("{SEED_ENV}: {e}"))),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let pool = match cli.common.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a, &cli.common),
        Command::Curve(a) => commands::cmd_curve(a, &cli.common),
        Command::Validate(a) => validate::cmd_validate(a, &cli.common),
    })
}
