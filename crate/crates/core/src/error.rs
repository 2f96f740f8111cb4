use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("generator index {0} is outside 1..=15")]
    InvalidGenerator(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    /// `det nu` drifted from 1, which only happens if the assembly is wrong
    /// or the parameters are so large that the products lose all precision.
    #[error("nu matrix has determinant {det}, expected 1")]
    SingularNu { det: f64 },
    #[error("non-finite input to the reduction")]
    NonFinite,
}

/// A coefficient could not be evaluated to a finite real.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("coefficient a{coefficient} is invalid at t = {t}: {detail}")]
pub struct ScheduleError {
    pub coefficient: usize,
    pub t: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error(transparent)]
    InvalidSchedule(#[from] ScheduleError),
    #[error("invalid integration options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagatorError {
    #[error("generic branch unavailable: {0}")]
    BranchUnavailable(String),
    #[error("degenerate kernel is not a function here: {0}")]
    DegenerateGeometry(String),
    #[error("kernel is singular at t = {t}")]
    SingularTime { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid under-resolved: {0}")]
    GridUnderresolved(String),
    #[error("invalid Gaussian state: {0}")]
    InvalidState(String),
}

/// Closed forms are undefined where the factorization itself is singular.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("closed form is singular at t = {t}")]
    SingularTime { t: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Byte-exact parse failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("{field}: {detail}")]
    Invalid { field: String, detail: String },
    #[error("{field}: {source}")]
    Expression { field: String, source: ParseError },
}

/// Top-level error used by the run orchestration and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Algebra(_) => "InvalidGenerator",
            Error::Reduction(ReductionError::SingularNu { .. }) => "SingularNu",
            Error::Reduction(ReductionError::NonFinite) => "NonFinite",
            Error::Schedule(_) | Error::Flow(FlowError::InvalidSchedule(_)) => "InvalidSchedule",
            Error::Flow(FlowError::InvalidOptions(_)) => "InvalidOptions",
            Error::Propagator(PropagatorError::BranchUnavailable(_)) => "BranchUnavailable",
            Error::Propagator(PropagatorError::DegenerateGeometry(_)) => "DegenerateGeometry",
            Error::Propagator(PropagatorError::SingularTime { .. }) => "SingularTime",
            Error::ClosedForm(ClosedFormError::SingularTime { .. }) => "SingularTime",
            Error::ClosedForm(ClosedFormError::InvalidParameter(_)) => "InvalidParameter",
            Error::Oracle(OracleError::GridUnderresolved(_)) => "GridUnderresolved",
            Error::Oracle(OracleError::InvalidState(_)) => "InvalidState",
            Error::Parse(_) | Error::Config(ConfigError::Expression { .. }) => "ParseError",
            Error::Config(ConfigError::Io { .. }) | Error::Io { .. } => "Io",
            Error::Config(_) => "InvalidConfig",
        }
    }

    /// Where the error happened, when known (coefficient, byte offset, path).
    pub fn location(&self) -> Option<String> {
        match self {
            Error::Schedule(e) | Error::Flow(FlowError::InvalidSchedule(e)) => {
                Some(format!("a{} at t={}", e.coefficient, e.t))
            }
            Error::Parse(e) => Some(format!("byte {}", e.offset)),
            Error::Config(ConfigError::Expression { field, source }) => {
                Some(format!("{field} byte {}", source.offset))
            }
            Error::Config(ConfigError::Invalid { field, .. }) => Some(field.clone()),
            Error::Config(ConfigError::Io { path, .. }) | Error::Io { path, .. } => Some(path.clone()),
            _ => None,
        }
    }
}
