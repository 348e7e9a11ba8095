use thiserror::Error;

use crate::construction::ScheduleViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded for {what}: {size} > {cap}")]
    Capacity {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The floor of a certified integral cannot be decided at the working precision.
    #[error("ambiguous floor: value {value} is within {margin:e} of an integer")]
    AmbiguousFloor { value: f64, margin: f64 },

    #[error("density range violation in {parameter}: {detail}")]
    Range { parameter: String, detail: String },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("infeasible quota {quota}: required {required}, cell capacity {capacity}")]
    InfeasibleQuota {
        quota: i64,
        required: i64,
        capacity: i64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no regularity constant up to the search cap {cap}")]
    CapExceeded { cap: u32 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("state error: {0}")]
    State(String),

    #[error("invalid schedule: {}", join_violations(.0))]
    Schedule(Vec<ScheduleViolation>),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[ScheduleViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
