//! Subcommands tying the profile pipeline together.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use profile_fcm::drift::DriftError;
use profile_fcm::fcm::FcmError;
use profile_fcm::ingest::IngestError;
use profile_fcm::tariff::TariffError;
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    /// Prefixes the message with the file it came from.
    pub fn in_file(self, path: &std::path::Path) -> CliError {
        let wrap = |m: String| format!("{}: {m}", path.display());
        match self {
            CliError::Usage(m) => CliError::Usage(wrap(m)),
            CliError::Data(m) => CliError::Data(wrap(m)),
            CliError::Numerical(m) => CliError::Numerical(wrap(m)),
        }
    }
}

impl From<FcmError> for CliError {
    fn from(e: FcmError) -> Self {
        match e {
            FcmError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            FcmError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidSeasons(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TariffError> for CliError {
    fn from(e: TariffError) -> Self {
        match e {
            TariffError::ClusterOutOfRange { .. } | TariffError::InvalidThreshold(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DriftError> for CliError {
    fn from(e: DriftError) -> Self {
        match e {
            DriftError::TargetOutOfRange { .. } => CliError::Usage(e.to_string()),
            DriftError::Fcm(inner) => inner.into(),
            DriftError::Ingest(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
