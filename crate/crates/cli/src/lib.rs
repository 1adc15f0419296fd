//! Batch front-end for `seqadapt`: reads a JSON config, runs one
//! subcommand and writes CSV (default) or JSON.

mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, parse_config, FileConfig};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_NUMERIC, EXIT_RUNTIME};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SEQADAPT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Draw one observation x = θ + εz.
    Simulate,
    /// Apply estimators to one observation.
    Estimate,
    /// Posterior mean, weights and optional draws for one observation.
    Posterior,
    /// Monte Carlo risk over estimators and radii B².
    RiskSweep,
    /// Fit a regression sample and reconstruct the function.
    Regression,
    /// Render truth, observation and estimates as functions on [0, 1].
    Whitenoise,
    /// Monte Carlo small-ball probability.
    SmallBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Shorthand for --set seed=N.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shorthand for --set reps=N.
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Override a config key; the value is parsed as JSON when possible.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "seqadapt",
    version,
    about = "Adaptive estimation in the Gaussian sequence model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub subcommand: Command,
    pub config_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub format: Format,
}

impl CliConfig {
    pub fn parse_from<I, T>(argv: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(argv)?;
        let f = cli.flags;
        let mut overrides = Vec::new();
        if let Some(s) = f.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(r) = f.reps {
            overrides.push(format!("reps={r}"));
        }
        overrides.extend(f.set);
        Ok(Self {
            subcommand: cli.command,
            config_path: f.config,
            output_path: f.out,
            overrides,
            format: if f.json { Format::Json } else { Format::Csv },
        })
    }
}

/// Run the command line `argv` (including the program name) and return the
/// process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match CliConfig::parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Execute a parsed command line.
pub fn run(cli: &CliConfig) -> CliResult<()> {
    let text = match &cli.config_path {
        Some(p) => Some(fs::read_to_string(p).map_err(|source| CliError::File {
            path: p.display().to_string(),
            source,
        })?),
        None => None,
    };
    let cfg = load_config(text.as_deref(), &cli.overrides)?;
    let base_dir = cli
        .config_path
        .as_ref()
        .and_then(|p| p.parent())
        .map(|p| p.to_path_buf());

    let body = || -> CliResult<Vec<u8>> {
        let fmt = cli.format;
        let mut buf = Vec::new();
        match cli.subcommand {
            Command::Simulate => commands::simulate(&cfg, fmt, &mut buf),
            Command::Estimate => commands::estimate(&cfg, fmt, &mut buf),
            Command::Posterior => commands::posterior(&cfg, fmt, &mut buf),
            Command::RiskSweep => commands::risk_sweep(&cfg, fmt, &mut buf),
            Command::Regression => commands::regression(&cfg, base_dir.as_deref(), fmt, &mut buf),
            Command::Whitenoise => commands::whitenoise(&cfg, fmt, &mut buf),
            Command::SmallBall => commands::small_ball(&cfg, fmt, &mut buf),
        }?;
        Ok(buf)
    };
    let buf = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?
            .install(body)?,
        None => body()?,
    };

    match &cli.output_path {
        Some(p) => fs::write(p, &buf).map_err(|source| CliError::File {
            path: p.display().to_string(),
            source,
        })?,
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            w.write_all(&buf)?;
            w.flush()?;
        }
    }
    Ok(())
}
