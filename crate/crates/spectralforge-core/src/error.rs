//! Shared error type for the solver and synthesis layers.

use alloc::string::String;
use core::fmt;

/// All failure modes of the crate.
///
/// Variants carry a human-readable message; the variant itself is the stable
/// machine-readable classification (the CLI maps variants to exit codes).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation
    /// (non-positive length, inverted window, non-finite input, ...).
    Domain(String),
    /// The requested evaluation point sits inside the guard band around a
    /// pole of a secular function.
    Pole { lambda: f64, pole: f64 },
    /// An iterative solve failed to reach its tolerance within its budget.
    Convergence(String),
    /// Structurally malformed operator (coupling count mismatch, wall used
    /// as an in-cell jump, ...).
    Shape(String),
    /// A combination of features the solver deliberately rejects.
    NotSupported(String),
    /// The finite-difference grid cannot represent the requested geometry.
    Grid(String),
    /// A spectral target violates the admissibility conditions.
    Spec(String),
    /// Coupling-strength escalation exhausted its round budget without the
    /// window spectrum reaching the certified configuration.
    Escalation(String),
    /// A monotone bisection lost its sign-change bracket.
    Bracket(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Pole { lambda, pole } => {
                write!(f, "secular function pole: lambda={lambda} within guard band of pole {pole}")
            }
            Error::Convergence(m) => write!(f, "convergence failure: {m}"),
            Error::Shape(m) => write!(f, "malformed operator: {m}"),
            Error::NotSupported(m) => write!(f, "not supported: {m}"),
            Error::Grid(m) => write!(f, "grid error: {m}"),
            Error::Spec(m) => write!(f, "invalid spectral target: {m}"),
            Error::Escalation(m) => write!(f, "escalation failure: {m}"),
            Error::Bracket(m) => write!(f, "bracket failure: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
