//! Command-line front end for the `flatlab` experiments.

mod commands;
pub mod config;
pub mod report;

use clap::Parser;
use thiserror::Error;

use config::{Args, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("inconclusive: a Monte Carlo estimate exceeded its error budget")]
    Inconclusive,
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Inconclusive => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<flatlab::Error> for CliError {
    fn from(e: flatlab::Error) -> Self {
        use flatlab::Error as E;
        match e {
            E::InsufficientExactness { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Resolves the configuration from `argv` and an optional config file.
pub fn resolve<I, S>(argv: I) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| CliError::Config(e.render().to_string()))?;
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.overlay(&args.fields);
    if let Some(c) = args.command {
        cfg.command = Some(c);
    }
    Ok(cfg)
}

/// Runs one experiment and writes its report. Returns the report bytes.
pub fn execute(mut cfg: ExperimentConfig) -> Result<(Vec<u8>, bool), CliError> {
    let command = cfg
        .command
        .ok_or_else(|| CliError::Config("no command given".into()))?;
    cfg.seed()?;
    let outcome = commands::execute(command, &mut cfg)?;
    let bytes = report::render(&cfg, &outcome.table)?;
    report::emit(&cfg, &bytes)?;
    Ok((bytes, outcome.inconclusive))
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    if let Err(e) = Args::try_parse_from(&args) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let _ = e.print();
            return 0;
        }
    }
    let result = resolve(args).and_then(execute);
    match result {
        Ok((_, false)) => 0,
        Ok((_, true)) => {
            eprintln!("flatlab: {}", CliError::Inconclusive);
            CliError::Inconclusive.exit_code()
        }
        Err(e) => {
            eprintln!("flatlab: {e}");
            e.exit_code()
        }
    }
}
