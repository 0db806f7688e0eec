use std::fmt;

use thiserror::Error;

/// Modeling assumption a validation failure refers to.
///
/// The `Display` form is the short tag printed in front of every
/// validation message, so downstream tooling can grep for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssumptionTag {
    /// Positivity of the physical constants.
    Constants,
    /// Regularity class of the sources `f` and `g`.
    Sources,
    /// Regularity of the initial data.
    InitialData,
    /// Definition of the source-driven radius `rho = |f|_inf / gamma`.
    Rho,
    /// Initial range and mean band inside the interior of `D(beta)`.
    Compatibility,
}

impl AssumptionTag {
    pub fn tag(&self) -> &'static str {
        match self {
            AssumptionTag::Constants => "(2.5)",
            AssumptionTag::Sources => "(2.11)",
            AssumptionTag::InitialData => "(2.12)",
            AssumptionTag::Rho => "(2.13)",
            AssumptionTag::Compatibility => "(2.14)",
        }
    }
}

impl fmt::Display for AssumptionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A single violated modeling assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionViolation {
    pub tag: AssumptionTag,
    pub message: String,
}

impl AssumptionViolation {
    pub fn new(tag: AssumptionTag, message: impl Into<String>) -> Self {
        Self {
            tag,
            message: message.into(),
        }
    }
}

impl fmt::Display for AssumptionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tag, self.message)
    }
}

fn join_violations(v: &[AssumptionViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Error)]
pub enum Error {
    /// Structural misconfiguration (domain, mode count, parameter ranges).
    #[error("configuration error: {0}")]
    Config(String),

    /// One or more modeling assumptions fail for the given data.
    #[error("validation failed:\n{}", join_violations(.0))]
    Validation(Vec<AssumptionViolation>),

    /// Input outside the domain of an operator (e.g. nonzero mean passed to `N`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched shapes or bases between arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// Iterative solver failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::Usage(_)
            | Error::Domain(_) => 2,
            Error::Numeric(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
