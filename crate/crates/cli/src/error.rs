use std::path::PathBuf;

use cas_core::CasError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("solver failed at seed {seed}, SNR_c {snr_c_db} dB: {source}")]
    Point {
        seed: u64,
        snr_c_db: f64,
        #[source]
        source: CasError,
    },
}

impl CliError {
    /// Process exit code: 2 config, 4 I/O, 1 for solver failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Point { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit code when any emitted record carries a degeneracy or non-convergence flag.
pub const EXIT_FLAGGED: u8 = 3;
