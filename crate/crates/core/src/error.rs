use thiserror::Error;

/// Coarse classification used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    Capacity,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Validation => 1,
            ErrorCategory::Numerical => 2,
            ErrorCategory::Capacity => 3,
        }
    }
}

/// Every fallible operation in the crate reports one of these. The `op`
/// field names the module and operation that raised it, e.g.
/// `"spectrum::dress"`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch: {msg}")]
    Dimension { op: &'static str, msg: String },

    #[error("{op}: invalid input: {msg}")]
    Validation { op: &'static str, msg: String },

    #[error("{op}: outside domain: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("{op}: capacity exceeded: {msg}")]
    Capacity { op: &'static str, msg: String },

    #[error("{op}: numerical failure: {msg}")]
    Numerical { op: &'static str, msg: String },

    #[error("{op}: degenerate energies: {msg}")]
    Degeneracy { op: &'static str, msg: String },

    #[error("{op}: strong mixing, best overlap^2 = {overlap_sq:.6} < 0.5 for anchor {anchor}")]
    StrongMixing {
        op: &'static str,
        anchor: String,
        overlap_sq: f64,
    },

    #[error("{op}: insufficient data: {msg}")]
    InsufficientData { op: &'static str, msg: String },

    #[error("{op}: step size too large: {msg}")]
    StepSize { op: &'static str, msg: String },

    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("config line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey { line: usize, section: String, key: String },

    #[error("{op}: i/o error: {source}")]
    Io {
        op: &'static str,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Dimension { .. }
            | Error::Validation { .. }
            | Error::Domain { .. }
            | Error::Syntax { .. }
            | Error::UnknownKey { .. }
            | Error::Io { .. } => ErrorCategory::Validation,
            Error::Numerical { .. }
            | Error::Degeneracy { .. }
            | Error::StrongMixing { .. }
            | Error::InsufficientData { .. }
            | Error::StepSize { .. } => ErrorCategory::Numerical,
            Error::Capacity { .. } => ErrorCategory::Capacity,
        }
    }

    /// Short stable code written into CSV rows that failed.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Validation { .. } => "validation",
            Error::Domain { .. } => "domain",
            Error::Capacity { .. } => "capacity",
            Error::Numerical { .. } => "numerical",
            Error::Degeneracy { .. } => "degeneracy",
            Error::StrongMixing { .. } => "strong_mixing",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::StepSize { .. } => "step_size",
            Error::Syntax { .. } => "syntax",
            Error::UnknownKey { .. } => "unknown_key",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn dimension(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Dimension { op, msg: msg.into() }
    }

    pub(crate) fn validation(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Validation { op, msg: msg.into() }
    }

    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn capacity(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Capacity { op, msg: msg.into() }
    }

    pub(crate) fn numerical(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical { op, msg: msg.into() }
    }

    pub(crate) fn degeneracy(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Degeneracy { op, msg: msg.into() }
    }

    pub(crate) fn insufficient(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InsufficientData { op, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
