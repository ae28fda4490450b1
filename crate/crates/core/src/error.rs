use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid tour: {0}")]
    InvalidTour(String),

    #[error("instance too large: n = {n}, limit is {max}")]
    InstanceTooLarge { n: usize, max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid rate {value} at ({i}, {j}); rates must lie in (0, 1]")]
    InvalidRate { i: usize, j: usize, value: f64 },

    #[error("inconsistent states at ({i}, {j}): x_t is active where the target is not")]
    InconsistentStates { i: usize, j: usize },

    #[error("schedule {kind} violation at index {index}")]
    Schedule { kind: ScheduleViolation, index: usize },

    #[error("degenerate posterior: zero normalizer")]
    DegeneratePosterior,

    #[error("degenerate instance: nodes {i} and {j} coincide")]
    DegenerateInstance { i: usize, j: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleViolation {
    /// Fewer than two observation times.
    Length,
    Monotonicity,
    Bounds,
}

impl std::fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleViolation::Length => f.write_str("length"),
            ScheduleViolation::Monotonicity => f.write_str("monotonicity"),
            ScheduleViolation::Bounds => f.write_str("bounds"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
