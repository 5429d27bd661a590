use thiserror::Error;

use crate::expr::ParseError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] blaschke_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const FAILED: i32 = 2;
    pub const LOW_CONFIDENCE: i32 = 3;
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "USAGE",
            CliError::Parse(e) => e.code(),
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "IO_ERROR",
            CliError::Json(_) => "JSON_ERROR",
        }
    }

    /// Bad input is a usage error; numerical trouble that a better-separated
    /// input would avoid is low confidence; anything else is a failure.
    pub fn exit_code(&self) -> i32 {
        use blaschke_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Parse(_) => exit::USAGE,
            CliError::Core(E::InvalidInput(_) | E::DiskMargin { .. } | E::SizeLimit { .. }) => {
                exit::USAGE
            }
            CliError::Core(
                E::FrameNotFound { .. }
                | E::LoopPlanningFailure(_)
                | E::LabelingAmbiguity(_)
                | E::ContinuationCollision(_)
                | E::StepUnderflow(_)
                | E::MatchingAmbiguity(_),
            ) => exit::LOW_CONFIDENCE,
            _ => exit::FAILED,
        }
    }
}
