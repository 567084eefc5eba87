//! Batch interface to the singsym toolkit.
//!
//! Every command reads a TOML config, runs one pipeline and writes either
//! line-delimited JSON records or a CSV table. Exit codes: 0 pass, 1 check
//! failure, 2 usage or config error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use singsym::config::ConfigFile;
use singsym::report::Format;
use singsym::Error;

mod commands;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "singsym", version, about = "Checks, flows and action-angle coordinates for folded and b-symplectic integrable systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check closedness and the singularity conditions of the form.
    Validate(Common),
    /// Commutation, independence and admissibility of the observables.
    Check(Common),
    /// Period lattices, actions, angles and the normal-form residual.
    Actionangle(Common),
    /// Integrate a Hamiltonian flow and tabulate the drift of every observable.
    Flow(Common),
    /// Run a construction recipe and emit the result as a config.
    Construct(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// One JSON object per line.
    Json,
    /// Comma-separated table with a header row.
    Csv,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Format {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// TOML config; relative paths are resolved against the config directory.
    #[arg(long)]
    pub config: PathBuf,
    /// Default directory for relative config paths.
    #[arg(long, env = "SINGSYM_CONFIG_DIR")]
    pub config_dir: Option<PathBuf>,
    /// Seed of the sample sets (overrides `[run] seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pass/fail tolerance of the command (overrides `[run] tol`).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Interior sample count (overrides `[run] samples`).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

impl Common {
    fn config_path(&self) -> PathBuf {
        match &self.config_dir {
            Some(dir) if self.config.is_relative() => dir.join(&self.config),
            _ => self.config.clone(),
        }
    }
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    pub message: Option<String>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_config() => EXIT_USAGE,
        Error::Regression(_) => EXIT_FAIL,
        _ => EXIT_NUMERICAL,
    }
}

fn load(path: &Path) -> Result<ConfigFile, Error> {
    let src = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ConfigFile::parse(&src)
}

/// Run a parsed command; nothing is written.
pub fn execute(cli: &Cli) -> Outcome {
    let (common, run): (&Common, commands::Runner) = match &cli.command {
        Command::Validate(c) => (c, commands::validate),
        Command::Check(c) => (c, commands::check),
        Command::Actionangle(c) => (c, commands::actionangle),
        Command::Flow(c) => (c, commands::flow),
        Command::Construct(c) => (c, commands::construct),
    };
    let result = load(&common.config_path()).and_then(|cfg| run(&cfg, common));
    match result {
        Ok((pass, report)) => Outcome {
            code: if pass { EXIT_PASS } else { EXIT_FAIL },
            report,
            message: None,
        },
        Err(e) => Outcome {
            code: exit_code(&e),
            report: String::new(),
            message: Some(e.to_string()),
        },
    }
}

/// Parse arguments, run, and deliver the report to `--out` or stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let out = execute(&cli);
    let target = match &cli.command {
        Command::Validate(c) | Command::Check(c) | Command::Actionangle(c) | Command::Flow(c) | Command::Construct(c) => c.out.clone(),
    };
    if let Some(m) = &out.message {
        eprintln!("error: {m}");
    }
    match target {
        Some(path) if out.message.is_none() => {
            if let Err(e) = fs::write(&path, &out.report) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        _ => print!("{}", out.report),
    }
    out.code
}
