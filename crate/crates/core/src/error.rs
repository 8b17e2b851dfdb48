//! Error type shared across the pipeline stages.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad config, bad arguments, violated preconditions.
    Validation,
    /// A referenced file or dataset does not exist.
    MissingInput,
    /// A solver diverged or failed to converge.
    Numerical,
    /// I/O or serialization failure.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing input: {path}: {detail}")]
    MissingInput { path: PathBuf, detail: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("dataset error (participant {participant}, trial {trial}): {detail}")]
    Dataset {
        participant: u32,
        trial: u32,
        detail: String,
    },

    #[error("rating {value} out of [1, 9] (participant {participant}, trial {trial})")]
    RatingOutOfRange {
        participant: u32,
        trial: u32,
        value: f64,
    },

    #[error("unknown channel {0:?}")]
    UnknownChannel(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("sampling rate {rate_hz} Hz cannot align dyadic band edges: {detail}")]
    BandAlignment { rate_hz: f64, detail: String },

    #[error("SMO did not converge after {passes} passes ({violations} KKT violations remain)")]
    SvmNonConvergence { passes: usize, violations: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    AnnDiverged { epoch: usize },

    #[error("{stage} failed for {context}: {source}")]
    Stage {
        stage: &'static str,
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
}

impl Error {
    /// Wrap an error with pipeline-stage context, e.g. the grid cell and
    /// fold it occurred in.
    pub fn in_stage(self, stage: &'static str, context: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::MissingInput { .. } => ErrorCategory::MissingInput,
            Error::Config(_)
            | Error::Dataset { .. }
            | Error::RatingOutOfRange { .. }
            | Error::UnknownChannel(_)
            | Error::Invalid(_)
            | Error::BandAlignment { .. } => ErrorCategory::Validation,
            Error::SvmNonConvergence { .. } | Error::AnnDiverged { .. } => {
                ErrorCategory::Numerical
            }
            Error::Stage { source, .. } => source.category(),
            Error::Io { .. } | Error::Parse { .. } => ErrorCategory::Io,
        }
    }

    /// Helper for fallible file operations.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput {
                path,
                detail: "file not found".into(),
            }
        } else {
            Error::Io { path, source }
        }
    }
}
