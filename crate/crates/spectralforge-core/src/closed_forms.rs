//! Closed-form spectral data of a single cell: an interval of length `d` with
//! one δ interaction of strength `α` at its midpoint and either Dirichlet or
//! Neumann conditions at both ends.
//!
//! Away from the symmetric ("pole") eigenvalues, the eigenvalues of such a
//! cell are exactly the solutions of `F(λ) = α`, where `F` is the secular
//! function of the cell:
//!
//! * Dirichlet ends: `F(λ) = -2√λ·cot(d√λ/2)` for `λ > 0`, `-4/d` at `λ = 0`,
//!   `-2√(-λ)·coth(d√(-λ)/2)` for `λ < 0`. Poles at `(2πk/d)²`, `k ≥ 1`.
//! * Neumann ends: `F(λ) = 2√λ·tan(d√λ/2)` for `λ > 0`, `0` at `λ = 0`,
//!   `-2√(-λ)·tanh(d√(-λ)/2)` for `λ < 0`. Poles at `(π(2k-1)/d)²`, `k ≥ 1`.
//!
//! Both functions are strictly increasing on every branch between consecutive
//! poles and the full spectrum of the cell is the pole lattice joined with the
//! `F(λ) = α` solutions. The lowest eigenvalue lies on the first branch
//! (below the first pole) and is unique there; [`first_eigenvalue_dirichlet`]
//! and [`first_eigenvalue_neumann`] invert the secular function on that
//! branch.

use crate::error::Error;
use crate::num;
use crate::Result;
use alloc::format;

const PI: f64 = core::f64::consts::PI;

/// Below this value of `x = d√|λ|/2` the products `x·cot(x)` / `x·coth(x)`
/// are evaluated by their Taylor series to keep the λ → 0 limit smooth.
const SERIES_THRESHOLD: f64 = 1e-4;

/// Relative half-width (in units of the local pole spacing) of the guard
/// band around each secular-function pole.
const POLE_GUARD_REL: f64 = 1e-9;

/// Hard cap on bisection iterations in the inverse solves.
const MAX_BISECTIONS: usize = 200;

/// Which end conditions the single cell carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    Dirichlet,
    Neumann,
}

/// The lattice of symmetric eigenvalues of a cell, i.e. the poles of its
/// secular function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleLattice {
    pub kind: EndKind,
    pub d: f64,
}

impl PoleLattice {
    pub fn new(kind: EndKind, d: f64) -> Result<Self> {
        check_length(d)?;
        Ok(Self { kind, d })
    }

    /// The `k`-th pole (`k ≥ 1`): `(2πk/d)²` for Dirichlet ends,
    /// `(π(2k-1)/d)²` for Neumann ends.
    pub fn pole(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        let root = match self.kind {
            EndKind::Dirichlet => 2.0 * PI * k as f64 / self.d,
            EndKind::Neumann => PI * (2.0 * k as f64 - 1.0) / self.d,
        };
        root * root
    }

    /// The first pole, bounding the branch that carries the lowest eigenvalue.
    pub fn first(&self) -> f64 {
        self.pole(1)
    }

    /// Index of the pole nearest to `lambda` (`None` for `lambda` at or below
    /// zero, where there are no poles).
    pub fn nearest(&self, lambda: f64) -> Option<usize> {
        if lambda <= 0.0 {
            return None;
        }
        let x = self.d * num::sqrt(lambda) / 2.0;
        let k = match self.kind {
            EndKind::Dirichlet => num::round(x / PI) as isize,
            EndKind::Neumann => num::round(x / PI + 0.5) as isize,
        };
        if k >= 1 {
            Some(k as usize)
        } else {
            Some(1)
        }
    }

    /// Local pole spacing near pole `k` (distance to the next pole up).
    pub fn spacing(&self, k: usize) -> f64 {
        self.pole(k + 1) - self.pole(k)
    }

    fn guard_check(&self, lambda: f64) -> Result<()> {
        if let Some(k) = self.nearest(lambda) {
            let pole = self.pole(k);
            let guard = POLE_GUARD_REL * self.spacing(k);
            if num::abs(lambda - pole) < guard {
                return Err(Error::Pole { lambda, pole });
            }
        }
        Ok(())
    }
}

fn check_length(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("cell length must be positive and finite, got {d}")));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

/// `x·cot(x)`, series-stabilized near zero.
fn x_cot_x(x: f64) -> f64 {
    if num::abs(x) < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 3.0 - x2 * x2 / 45.0
    } else {
        x * num::cos(x) / num::sin(x)
    }
}

/// `x·coth(x)`, series-stabilized near zero and overflow-free for large `x`.
fn x_coth_x(x: f64) -> f64 {
    if num::abs(x) < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else {
        x / num::tanh(x)
    }
}

/// Secular function of a cell with Dirichlet ends.
///
/// Strictly increasing between consecutive poles; returns [`Error::Pole`]
/// inside the guard band around a pole.
pub fn secular_dirichlet(d: f64, lambda: f64) -> Result<f64> {
    check_length(d)?;
    check_finite("lambda", lambda)?;
    PoleLattice { kind: EndKind::Dirichlet, d }.guard_check(lambda)?;
    let x = d * num::sqrt(num::abs(lambda)) / 2.0;
    Ok(if lambda > 0.0 {
        -(4.0 / d) * x_cot_x(x)
    } else {
        // Covers λ = 0 (x = 0, series value 1) and λ < 0 in one expression.
        -(4.0 / d) * x_coth_x(x)
    })
}

/// Secular function of a cell with Neumann ends.
pub fn secular_neumann(d: f64, lambda: f64) -> Result<f64> {
    check_length(d)?;
    check_finite("lambda", lambda)?;
    PoleLattice { kind: EndKind::Neumann, d }.guard_check(lambda)?;
    let x = d * num::sqrt(num::abs(lambda)) / 2.0;
    Ok(if lambda > 0.0 {
        (4.0 / d) * x * num::tan(x)
    } else {
        -(4.0 / d) * x * num::tanh(x)
    })
}

fn secular(kind: EndKind, d: f64, lambda: f64) -> Result<f64> {
    match kind {
        EndKind::Dirichlet => secular_dirichlet(d, lambda),
        EndKind::Neumann => secular_neumann(d, lambda),
    }
}

/// Lowest eigenvalue of a Dirichlet-ended cell as a function of the δ
/// strength: the unique solution of `F(λ) = α` below the first pole.
///
/// The result satisfies `|λ - λ*| ≤ tol`; a Newton polish after the bisection
/// additionally drives the secular residual toward machine precision.
pub fn first_eigenvalue_dirichlet(alpha: f64, d: f64, tol: f64) -> Result<f64> {
    solve_first_branch(EndKind::Dirichlet, alpha, d, tol)
}

/// Lowest eigenvalue of a Neumann-ended cell: the unique solution of
/// `F(λ) = α` below the first Neumann pole `(π/d)²`.
pub fn first_eigenvalue_neumann(alpha: f64, d: f64, tol: f64) -> Result<f64> {
    solve_first_branch(EndKind::Neumann, alpha, d, tol)
}

fn solve_first_branch(kind: EndKind, alpha: f64, d: f64, tol: f64) -> Result<f64> {
    check_length(d)?;
    check_finite("alpha", alpha)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let pole1 = PoleLattice { kind, d }.first();

    // Lower bracket end: F(λ) ~ -2√(-λ) as λ → -∞, so a point below
    // -α²/4 - 1 is (eventually) below any prescribed level.
    let mut lo = num::min(0.0, -alpha * alpha / 4.0 - 1.0);
    let mut expansions = 0;
    while secular(kind, d, lo)? >= alpha {
        lo = 2.0 * lo - 1.0;
        expansions += 1;
        if expansions > MAX_BISECTIONS {
            return Err(Error::Convergence(format!(
                "could not bracket first-branch eigenvalue from below for alpha={alpha}, d={d}"
            )));
        }
    }

    // Upper bracket end: approach the first pole from below until the secular
    // value exceeds the target (F → +∞ at the pole).
    let mut hi = 0.0;
    let mut found_hi = false;
    for j in 0..64 {
        let gap = pole1 * 1e-3 * num::powf(0.5, j as f64);
        let cand = pole1 - gap;
        match secular(kind, d, cand) {
            Ok(v) if v > alpha => {
                hi = cand;
                found_hi = true;
                break;
            }
            Ok(_) => continue,
            Err(Error::Pole { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if !found_hi {
        return Err(Error::Convergence(format!(
            "could not bracket first-branch eigenvalue from above for alpha={alpha}, d={d}"
        )));
    }

    // Bisection to the requested λ tolerance.
    let mut iter = 0;
    while hi - lo > tol && iter < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        if secular(kind, d, mid)? < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
    }
    let mut lambda = 0.5 * (lo + hi);

    // Safeguarded Newton polish on the secular residual.
    let target = 1e-13 * num::max(1.0, num::abs(alpha));
    for _ in 0..12 {
        let g = secular(kind, d, lambda)? - alpha;
        if num::abs(g) <= target {
            break;
        }
        let h = 1e-7 * (1.0 + num::abs(lambda));
        let gp = match (secular(kind, d, lambda + h), secular(kind, d, lambda - h)) {
            (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
            _ => break,
        };
        if !(gp > 0.0) {
            break;
        }
        let step = g / gp;
        let next = lambda - step;
        if !(next > lo && next < hi) {
            break;
        }
        if g > 0.0 {
            hi = lambda;
        } else {
            lo = lambda;
        }
        lambda = next;
    }
    Ok(lambda)
}
