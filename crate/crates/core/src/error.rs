use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::TaskId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- input files ----
    #[error("file not found: {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}:{line}: malformed row: {reason}", path.display())]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("task ids must be exactly 1..T, first gap at {expected}")]
    NonContiguousTaskIds { expected: u32 },
    #[error("session ids must be non-decreasing along task order (task {task})")]
    SessionOrderViolation { task: TaskId },
    #[error("line {line}: unknown task id {task}")]
    UnknownTaskId { task: i64, line: u64 },
    #[error("line {line}: cannot parse timestamp: {reason}")]
    TimestampParseError { line: u64, reason: String },
    #[error("unknown learner {id}")]
    UnknownLearner { id: String },
    #[error("duplicate learner {id}")]
    DuplicateLearner { id: String },
    #[error("grade {grade} for learner {id} is outside [0, 100]")]
    GradeOutOfRange { id: String, grade: f64 },
    #[error("line {line}: unknown response token {token:?}")]
    UnknownResponse { token: String, line: u64 },
    #[error("learner {id}: invalid sequence: {reason}")]
    InvalidSequence { id: String, reason: String },

    // ---- sequence statistics ----
    #[error("cohort has no non-empty sequences")]
    EmptyCohort,
    #[error("no transitions observed{}", group.as_deref().map(|g| format!(" in group {g}")).unwrap_or_default())]
    NoTransitions { group: Option<String> },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("task {task} outside 1..={max}")]
    TaskOutOfRange { task: i64, max: usize },

    // ---- contrast ----
    #[error("need at least two graded learners and a non-empty group (found {graded} graded)")]
    TooFewGraded { graded: usize },
    #[error("quantile {0} outside (0, 0.5]")]
    InvalidQuantile(f64),
    #[error("paired vectors differ in length ({left} vs {right}) or have fewer than 2 entries")]
    LengthMismatch { left: usize, right: usize },
    #[error("paired differences have zero variance")]
    ZeroVariance,

    // ---- model ----
    #[error("task {task} is already acquired")]
    AlreadyAcquired { task: TaskId },
    #[error("every task is already acquired")]
    FullState,
    #[error("task {task} appears more than once")]
    DuplicateTask { task: TaskId },
    #[error("theta dimensions do not match ({expected} tasks expected, got {found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no training sequences")]
    EmptyTrainingSet,
    #[error("log-likelihood became non-finite")]
    NonFiniteLikelihood,
    #[error("configuration leaves no posterior samples")]
    EmptyPosterior,
    #[error("requested length {length} outside 1..={max}")]
    LengthOutOfRange { length: usize, max: usize },
    #[error("group {group} has {size} training learners, need at least 2")]
    GroupTooSmall { group: String, size: usize },
    #[error("{tasks} tasks is too many for exhaustive enumeration (max {max})")]
    TooLarge { tasks: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Broad failure class, used by the command-line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        }
    }
}

impl Error {
    /// Stable variant name, reported in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingFile { .. } => "MissingFile",
            Error::MalformedRow { .. } => "MalformedRow",
            Error::NonContiguousTaskIds { .. } => "NonContiguousTaskIds",
            Error::SessionOrderViolation { .. } => "SessionOrderViolation",
            Error::UnknownTaskId { .. } => "UnknownTaskId",
            Error::TimestampParseError { .. } => "TimestampParseError",
            Error::UnknownLearner { .. } => "UnknownLearner",
            Error::DuplicateLearner { .. } => "DuplicateLearner",
            Error::GradeOutOfRange { .. } => "GradeOutOfRange",
            Error::UnknownResponse { .. } => "UnknownResponse",
            Error::InvalidSequence { .. } => "InvalidSequence",
            Error::EmptyCohort => "EmptyCohort",
            Error::NoTransitions { .. } => "NoTransitions",
            Error::EmptySequence => "EmptySequence",
            Error::TaskOutOfRange { .. } => "TaskOutOfRange",
            Error::TooFewGraded { .. } => "TooFewGraded",
            Error::InvalidQuantile(_) => "InvalidQuantile",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ZeroVariance => "ZeroVariance",
            Error::AlreadyAcquired { .. } => "AlreadyAcquired",
            Error::FullState => "FullState",
            Error::DuplicateTask { .. } => "DuplicateTask",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::NonFiniteLikelihood => "NonFiniteLikelihood",
            Error::EmptyPosterior => "EmptyPosterior",
            Error::LengthOutOfRange { .. } => "LengthOutOfRange",
            Error::GroupTooSmall { .. } => "GroupTooSmall",
            Error::TooLarge { .. } => "TooLarge",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::MissingFile { .. }
            | Error::InvalidQuantile(_)
            | Error::InvalidConfig(_)
            | Error::EmptyPosterior
            | Error::TooLarge { .. } => ErrorClass::Config,
            Error::ZeroVariance | Error::NonFiniteLikelihood => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}
