//! The `rrb` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage and parse errors, 3 for numerical
//! failures and too few records.

mod commands;
pub mod format;
pub mod input;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
pub use format::{fmt_sig, Format, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Lib(e) => match e {
                Error::Config(_)
                | Error::Domain { .. }
                | Error::EmptyInput
                | Error::NonFinite { .. } => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Io(s) => f.write_str(s),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rrb",
    version,
    about = "Estimate the exponential scale parameter from upper record ranges"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the upper records and record ranges of a data file.
    Extract(ExtractArgs),
    /// Point estimates of δ from the first n records.
    Estimate(EstimateArgs),
    /// Credible intervals for δ.
    Interval(IntervalArgs),
    /// Seeded Monte Carlo study of estimators and interval coverage.
    Simulate(SimulateArgs),
    /// Risk, Bayes risk and admissibility of m R + d.
    Risk(RiskArgs),
    /// Recompute a table of the worked example.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Data file, one value per line or comma separated; `-` reads stdin.
    input: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    input: String,
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Comma-separated estimator ids.
    #[arg(
        long,
        default_value = "mle_records,mle_urr,bayes_quadratic,bayes_squared,bayes_absolute"
    )]
    estimators: String,
    /// Record counts: `4`, `2..6` or `2,4`. Defaults to every available n.
    #[arg(long)]
    n: Option<String>,
    /// Attach analytic mean, variance and MSE at this δ.
    #[arg(long, allow_negative_numbers = true)]
    delta_ref: Option<f64>,
    #[arg(long, default_value_t = 6)]
    digits: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct IntervalArgs {
    input: String,
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Comma-separated α values; the level is 1 - α.
    #[arg(long, default_value = "0.1,0.05,0.01")]
    alpha: String,
    /// `all` or a comma list of equal_tails, hpd_exact, hpd_hpm.
    #[arg(long, default_value = "all")]
    kind: String,
    #[arg(long)]
    n: Option<String>,
    #[arg(long, default_value_t = 8)]
    digits: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON simulation config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, env = "RRB_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    estimators: Option<String>,
    /// α levels for the coverage study; none skips it.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    kinds: Option<String>,
    /// Output stem: writes STEM.csv, STEM.json and, with --alpha,
    /// STEM.intervals.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 6)]
    digits: usize,
    /// Format for stdout when --out is absent.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum LossArg {
    Scaled,
    Unscaled,
}

#[derive(Debug, Args)]
struct RiskArgs {
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    /// Number of records (4 for --k-sweep when omitted).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Prior b (2 for --k-sweep when omitted).
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, value_enum, default_value = "scaled")]
    loss: LossArg,
    /// `LO:HI`: tabulate r1, r2 and their gap on a log grid of k.
    #[arg(long)]
    k_sweep: Option<String>,
    #[arg(long, default_value_t = 1)]
    per_decade: usize,
    #[arg(long, default_value_t = 6)]
    digits: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=1))]
    table: u8,
    /// Data file; defaults to the built-in Example 1 sequence.
    #[arg(long)]
    input: Option<String>,
    #[arg(long, default_value_t = 3.0)]
    a: f64,
    #[arg(long, default_value_t = 5.0)]
    b: f64,
    #[arg(long, default_value_t = 6)]
    digits: usize,
    #[command(flatten)]
    output: OutputArgs,
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Extract(a) => commands::extract(a, out, err),
        Command::Estimate(a) => commands::estimate(a, out, err),
        Command::Interval(a) => commands::interval(a, out, err),
        Command::Simulate(a) => commands::simulate(a, out, err),
        Command::Risk(a) => commands::risk(a, out, err),
        Command::Reproduce(a) => commands::reproduce(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
