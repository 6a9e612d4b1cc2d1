//! Spectral theory of one-dimensional Schrödinger operators with finitely
//! many δ / δ′ point interactions on a bounded interval, plus the inverse
//! direction: synthesizing interaction strengths and interval lengths so that
//! the spectrum inside a prescribed window matches given targets.
//!
//! The crate is split into four layers:
//!
//! * [`closed_forms`] — exact secular functions of a single interval with one
//!   centred δ interaction and Dirichlet or Neumann ends, their pole lattices,
//!   and inverse solves for the lowest eigenvalue as a function of the
//!   interaction strength.
//! * [`chain`] — finite chains of cells joined by δ / δ′ couplings or rigid
//!   walls: transfer matrices, secular values, Prüfer-phase eigenvalue
//!   counting, and windowed eigenvalue location with count certificates.
//! * [`fd`] — an independent finite-difference oracle (symmetric tridiagonal
//!   discretization + Sturm bisection + Richardson extrapolation) used to
//!   cross-validate the closed-form solvers.
//! * [`synthesis`] — the inverse construction: essential-spectrum generator
//!   sequences, interval-length and neighborhood selection, coupling-strength
//!   schedules with escalation, and monotone tuning of the δ strengths until
//!   the window spectrum matches the targets.
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm` feature
//! and disable default features to build without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("no_std builds need the `libm` feature for float math");

pub mod chain;
pub mod closed_forms;
pub mod error;
pub mod fd;
mod num;
pub mod synthesis;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
