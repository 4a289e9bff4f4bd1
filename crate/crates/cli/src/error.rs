//! Error categories mapped onto the process exit codes: 2 for bad
//! configuration, 3 for numerical failures, 4 for I/O.

use gaitgen_core::cpg::{CpgError, GaitFileError};
use gaitgen_core::kinematics::KinematicsError;
use gaitgen_core::logfile::LogError;
use gaitgen_core::metrics::MetricsError;
use gaitgen_core::oscillator::OscillatorError;
use gaitgen_core::phasegen::{PhaseError, ScriptError};
use gaitgen_core::randomize::RandomizeError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_IO: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<OscillatorError> for CliError {
    fn from(e: OscillatorError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<CpgError> for CliError {
    fn from(e: CpgError) -> Self {
        match e {
            CpgError::Oscillator(inner) => CliError::Numeric(inner.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<GaitFileError> for CliError {
    fn from(e: GaitFileError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ScriptError> for CliError {
    fn from(e: ScriptError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PhaseError> for CliError {
    fn from(e: PhaseError) -> Self {
        match e {
            PhaseError::Cpg(inner) => inner.into(),
            PhaseError::Script(inner) => inner.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        match e {
            KinematicsError::Parse { .. } | KinematicsError::InvalidGeometry(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<RandomizeError> for CliError {
    fn from(e: RandomizeError) -> Self {
        CliError::Config(e.to_string())
    }
}
