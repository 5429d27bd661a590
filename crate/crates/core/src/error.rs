use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical and combinatorial pipeline.
///
/// Every variant maps to a stable machine-readable code via [`Error::code`],
/// which the command-line front end copies into its JSON reports.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("zero {zero} violates the disk margin {margin}")]
    DiskMargin { zero: Complex64, margin: f64 },
    #[error("point {0} is too close to a pole")]
    PoleProximity(Complex64),
    #[error("root finding failed: {0}")]
    RootFindingFailure(String),
    #[error("Newton iteration diverged from {start}")]
    NewtonDivergence { start: Complex64 },
    #[error("point {0} is too close to the cut system")]
    CutProximity(Complex64),
    #[error("point {0} lies outside the certified outer region")]
    OutsideRegion(Complex64),
    #[error("no certified frame found after {attempts} attempts")]
    FrameNotFound { attempts: usize },
    #[error("fiber labeling is ambiguous: {0}")]
    LabelingAmbiguity(String),
    #[error("loop planning failed: {0}")]
    LoopPlanningFailure(String),
    #[error("continuation collision near {0}")]
    ContinuationCollision(Complex64),
    #[error("continuation step underflow near {0}")]
    StepUnderflow(Complex64),
    #[error("matching of the end fiber is ambiguous: {0}")]
    MatchingAmbiguity(String),
    #[error("order {n} exceeds the enumeration limit {limit}")]
    SizeLimit { n: usize, limit: usize },
    #[error("rational fit is ill-conditioned (singular value ratio {0:e})")]
    FitIllConditioned(f64),
    #[error("recovered zero {0} lies outside the disk")]
    ZeroOutsideDisk(Complex64),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::DiskMargin { .. } => "DISK_MARGIN",
            Error::PoleProximity(_) => "POLE_PROXIMITY",
            Error::RootFindingFailure(_) => "ROOT_FINDING_FAILURE",
            Error::NewtonDivergence { .. } => "NEWTON_DIVERGENCE",
            Error::CutProximity(_) => "CUT_PROXIMITY",
            Error::OutsideRegion(_) => "OUTSIDE_REGION",
            Error::FrameNotFound { .. } => "FRAME_NOT_FOUND",
            Error::LabelingAmbiguity(_) => "LABELING_AMBIGUITY",
            Error::LoopPlanningFailure(_) => "LOOP_PLANNING_FAILURE",
            Error::ContinuationCollision(_) => "CONTINUATION_COLLISION",
            Error::StepUnderflow(_) => "STEP_UNDERFLOW",
            Error::MatchingAmbiguity(_) => "MATCHING_AMBIGUITY",
            Error::SizeLimit { .. } => "SIZE_LIMIT",
            Error::FitIllConditioned(_) => "FIT_ILL_CONDITIONED",
            Error::ZeroOutsideDisk(_) => "ZERO_OUTSIDE_DISK",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
