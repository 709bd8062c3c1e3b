//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the engine, grouped roughly by subsystem.
#[derive(Debug, Error)]
pub enum Error {
    // knowledge graph
    #[error("duplicate entity id: {0}")]
    DuplicateId(String),
    #[error("invalid thing: {0}")]
    InvalidThing(String),
    #[error("unknown entity: {0}")]
    UnknownEntity(String),
    #[error("subContextOf edge {subject} -> {object} would close a cycle")]
    CycleRejected { subject: String, object: String },

    // activity stream
    #[error("malformed event: {0}")]
    MalformedEvent(String),
    #[error("missing field: {0}")]
    MissingField(&'static str),
    #[error("event invariant violated: {0}")]
    InvariantViolation(String),
    #[error("event at ts {ts} is {late:.1}s older than the last ingested event (window {window:.0}s)")]
    OutOfOrder { ts: f64, late: f64, window: f64 },

    // extraction
    #[error("dictionary built against graph version {dict} but graph is at {graph}")]
    StaleDictionary { dict: u64, graph: u64 },

    // preservation
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("invalid persona strategy: {0}")]
    InvalidStrategy(String),
    #[error("threshold calibration needs at least one labeled item")]
    EmptyFeedback,

    // context spaces
    #[error("context {0} is archived or deleted and cannot be modified")]
    ContextImmutable(String),
    #[error("split assignment does not cover member {0}")]
    IncompleteAssignment(String),
    #[error("cannot merge a context with itself: {0}")]
    SameContext(String),
    #[error("illegal context state transition {from} -> {to}")]
    IllegalTransition { from: String, to: String },

    // search
    #[error("query needs terms or a concept filter")]
    EmptyQuery,

    // harness
    #[error("invalid generator profile: {0}")]
    InvalidProfile(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("snapshot version {found} not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit status for the CLI: 1 for input errors, 2 for internal bugs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 2,
            _ => 1,
        }
    }
}
