use std::fmt;

use thiserror::Error;

/// Constraint classes reported by [`crate::model::validate_spec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    NegativeRate,
    KappaDiagonal,
    GammaRange,
    DimMismatch,
    NonFinite,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::NegativeRate => "NEGATIVE_RATE",
            ViolationKind::KappaDiagonal => "KAPPA_DIAGONAL",
            ViolationKind::GammaRange => "GAMMA_RANGE",
            ViolationKind::DimMismatch => "DIM_MISMATCH",
            ViolationKind::NonFinite => "NON_FINITE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at `{}`: {}",
            self.kind.code(),
            self.field,
            self.message
        )
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", join_violations(.0))]
    InvalidSpec(Vec<Violation>),
    #[error("invalid duration law: {0}")]
    InvalidLaw(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("joint law `{0}` has no conditional CDF and Monte Carlo kernels are disabled")]
    UnsupportedJoint(String),
    #[error("time {0} is not on the grid")]
    OffGrid(f64),
    #[error("atom of {law} at {at} is not a multiple of the grid step")]
    AtomOffGrid { law: String, at: f64 },
    #[error("cross kernel requested but not tabulated")]
    CrossNotTabulated,
    #[error("empty population")]
    EmptyPopulation,
    #[error("scheduled time is not finite (individual {id})")]
    ScheduleOverflow { id: usize },
    #[error("horizon mismatch: {0}")]
    HorizonMismatch(String),
    #[error("Picard iteration did not converge at step {step} (residual {residual:e})")]
    NoConvergence { step: usize, residual: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("bad initial condition: {0}")]
    BadInit(String),
    #[error("delay {0} is not a multiple of the grid step")]
    DelayOffGrid(f64),
    #[error("fluctuation limit not available: {0}")]
    FcltInadmissible(String),
    #[error("unknown driver family `{0}`")]
    UnknownFamily(String),
    #[error("covariance block `{block}` is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { block: String, min_eigenvalue: f64 },
    #[error("singular step matrix at step {step} (condition estimate {condition:e})")]
    SingularStep { step: usize, condition: f64 },
    #[error("event log inconsistent: {0}")]
    CorruptLog(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable upper-case code used in reports and exit-code mapping.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSpec(v) => v.first().map(|x| x.kind.code()).unwrap_or("VALIDATION"),
            Error::InvalidLaw(_) => "VALIDATION",
            Error::NegativeTime(_) => "NEGATIVE_TIME",
            Error::UnsupportedJoint(_) => "UNSUPPORTED_JOINT",
            Error::OffGrid(_) | Error::AtomOffGrid { .. } | Error::CrossNotTabulated => "OFF_GRID",
            Error::EmptyPopulation => "EMPTY_POPULATION",
            Error::ScheduleOverflow { .. } => "SCHEDULE_OVERFLOW",
            Error::HorizonMismatch(_) => "HORIZON_MISMATCH",
            Error::NoConvergence { .. } => "NO_CONVERGENCE",
            Error::GridMismatch(_) => "GRID_MISMATCH",
            Error::BadInit(_) => "BAD_INIT",
            Error::DelayOffGrid(_) => "DELAY_OFF_GRID",
            Error::FcltInadmissible(_) => "FCLT_INADMISSIBLE",
            Error::UnknownFamily(_) => "UNKNOWN_FAMILY",
            Error::NotPsd { .. } => "NOT_PSD",
            Error::SingularStep { .. } => "SINGULAR_STEP",
            Error::CorruptLog(_) => "CORRUPT_LOG",
            Error::Io(_) => "IO_ERROR",
            Error::Replicate { source, .. } => source.code(),
        }
    }

    /// True for failures of a numerical scheme rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::NotPsd { .. } | Error::SingularStep { .. } => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            Error::ScheduleOverflow { .. } => true,
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
