//! Error taxonomy shared by every module.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// The split drives the CLI exit codes: configuration and parse problems are
/// user errors (exit 1), `Contract`/`Overflow`/`Precision`/`NotFound`/
/// `Diagnostic` are violated operation contracts (exit 2), and `Resource`
/// means a size or budget limit was exceeded (exit 3).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// Checked integer arithmetic left the machine range.
    Overflow(&'static str),
    /// A documented precondition or invariant was violated.
    Contract(String),
    /// A size, memory, or work budget was exceeded.
    Resource(String),
    /// A floating-point reconstruction fell outside its certified tolerance.
    Precision(String),
    /// A search-style operation found no witness at this scale.
    NotFound(String),
    /// Malformed textual input (set specs, fractions).
    Parse(String),
    /// A scan or experiment produced no usable data points.
    Diagnostic(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Overflow(what) => write!(f, "arithmetic overflow in {what}"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Resource(msg) => write!(f, "resource limit: {msg}"),
            Error::Precision(msg) => write!(f, "precision loss: {msg}"),
            Error::NotFound(msg) => write!(f, "no witness found: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Diagnostic(msg) => write!(f, "diagnostic failure: {msg}"),
        }
    }
}
