//! Error type shared across the crate.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A parameter is out of its documented domain (lengths, signs, ranges).
    InvalidParameter(String),
    /// An atom has zero norm, so coherence/normalization is undefined.
    DegenerateAtom(String),
    /// A custom normalization kernel violates the kernel axioms.
    KernelInvariant(String),
    /// A kernel of the wrong shape was passed to a checker that constrains it.
    KernelShape(String),
    /// Correlation-type score requested on an all-zero input.
    UndefinedScore(String),
    /// A synthetic model cannot be realized as configured.
    InfeasibleModel(String),
    /// An index falls outside the data it addresses.
    OutOfBounds(String),
    Io(std::io::Error),
    /// Malformed file contents or config document.
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::DegenerateAtom(m) => write!(f, "degenerate atom: {m}"),
            Error::KernelInvariant(m) => write!(f, "kernel invariant violated: {m}"),
            Error::KernelShape(m) => write!(f, "kernel shape: {m}"),
            Error::UndefinedScore(m) => write!(f, "undefined score: {m}"),
            Error::InfeasibleModel(m) => write!(f, "infeasible model: {m}"),
            Error::OutOfBounds(m) => write!(f, "out of bounds: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Format(m) => write!(f, "format error: {m}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
