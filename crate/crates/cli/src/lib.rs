//! Scenario files, experiment drivers, and the on-disk formats of the `aklab`
//! command-line tool.
//!
//! Every run writes a `trajectory.csv` (`t,theta,K`), a `diagnostics.json`, a
//! `meta.json` for plotting, and a `manifest.json`, all deterministic given
//! the resolved scenario.

pub mod commands;
pub mod output;
pub mod scenario;

use std::process::ExitCode;

/// Errors carry the exit-code class of the failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("certificate failed")]
    CertificateFailed,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CertificateFailed => 1,
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<aklab::Error> for CliError {
    fn from(err: aklab::Error) -> Self {
        use aklab::Error as E;
        match err {
            E::NonFinite { .. }
            | E::NumericalBlowup { .. }
            | E::NoConvergence { .. }
            | E::SingularSystem(_)
            | E::SearchExhausted { .. } => CliError::Numerical(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn exit_code(result: CliResult<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::CertificateFailed) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
