//! Finite chains of interval cells joined by point interactions.
//!
//! A [`ChainOperator`] is a Schrödinger operator `-u''` on a bounded interval
//! that is partitioned into cells. Each cell of length `d` carries one jump
//! condition at its midpoint, and consecutive cells are joined by a coupling
//! jump or separated by a rigid wall:
//!
//! * `Delta(γ)`: `u` continuous, `u'(z+) - u'(z-) = γ·u(z)`.
//! * `DeltaPrime(γ)`: `u'` continuous, `u(z+) - u(z-) = γ·u'(z)`.
//! * `DirichletWall` / `NeumannWall`: full decoupling, the operator splits
//!   into independent sub-chains with the corresponding condition on each
//!   side of the wall.
//!
//! The outer ends carry Dirichlet, Neumann, or Robin conditions; the Robin
//! convention is `u'(left) = ½β·u(left)` and `u'(right) = -½β·u(right)`.
//!
//! Eigenvalue counting uses a continuous Prüfer phase `θ` with
//! `(u, u') ∝ (sin θ, cos θ)`. On a free segment the phase obeys
//! `θ' = cos²θ + λ sin²θ` and advances by a closed-form increment; a jump
//! rotates the direction within one half-turn. The number of eigenvalues
//! strictly below `λ` is recovered from the terminal phase against the
//! right-boundary direction, which is exact integer arithmetic and drives a
//! bisection search for the eigenvalues inside a window.

use crate::error::Error;
use crate::num;
use crate::Result;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

const PI: f64 = core::f64::consts::PI;

/// Relative width used when deciding that two eigenvalues from different
/// decoupled components are the same point of the merged spectrum.
const MERGE_EPS_REL: f64 = 1e-10;

/// Relative nudge applied when a count is requested exactly at an eigenvalue.
const EIGEN_NUDGE_REL: f64 = 1e-12;

/// A point interaction (or wall) at a single position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Jump {
    /// δ interaction: derivative jump `γ·u`.
    Delta(f64),
    /// δ′ interaction: value jump `γ·u'`.
    DeltaPrime(f64),
    /// Decoupling wall with Dirichlet conditions on both sides.
    DirichletWall,
    /// Decoupling wall with Neumann conditions on both sides.
    NeumannWall,
}

impl Jump {
    fn is_wall(self) -> bool {
        matches!(self, Jump::DirichletWall | Jump::NeumannWall)
    }

    fn strength(self) -> f64 {
        match self {
            Jump::Delta(g) | Jump::DeltaPrime(g) => g,
            _ => 0.0,
        }
    }
}

/// Condition at an outer end of the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Dirichlet,
    Neumann,
    /// `u'(left) = ½β·u(left)`, resp. `u'(right) = -½β·u(right)`.
    Robin(f64),
}

/// One cell: an interval of length `length` with `jump` at its midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub length: f64,
    pub jump: Jump,
}

impl Cell {
    pub fn delta(length: f64, strength: f64) -> Self {
        Cell { length, jump: Jump::Delta(strength) }
    }
}

/// A chain of cells with couplings between consecutive cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOperator {
    cells: Vec<Cell>,
    couplings: Vec<Jump>,
    left_bc: Boundary,
    right_bc: Boundary,
    origin: f64,
}

impl ChainOperator {
    /// Validate and assemble a chain. `couplings.len()` must equal
    /// `cells.len() - 1`; cell midpoints may not carry walls.
    pub fn new(
        cells: Vec<Cell>,
        couplings: Vec<Jump>,
        left_bc: Boundary,
        right_bc: Boundary,
        origin: f64,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Shape("chain needs at least one cell".into()));
        }
        if couplings.len() + 1 != cells.len() {
            return Err(Error::Shape(format!(
                "expected {} couplings for {} cells, got {}",
                cells.len() - 1,
                cells.len(),
                couplings.len()
            )));
        }
        for (i, c) in cells.iter().enumerate() {
            if !(c.length > 0.0) || !c.length.is_finite() {
                return Err(Error::Domain(format!(
                    "cell {i} has non-positive or non-finite length {}",
                    c.length
                )));
            }
            if c.jump.is_wall() {
                return Err(Error::Shape(format!("cell {i} carries a wall as its midpoint jump")));
            }
            if !c.jump.strength().is_finite() {
                return Err(Error::Domain(format!("cell {i} has non-finite jump strength")));
            }
        }
        for (i, j) in couplings.iter().enumerate() {
            if !j.strength().is_finite() {
                return Err(Error::Domain(format!("coupling {i} has non-finite strength")));
            }
        }
        if !origin.is_finite() {
            return Err(Error::Domain(format!("origin must be finite, got {origin}")));
        }
        for bc in [left_bc, right_bc] {
            if let Boundary::Robin(b) = bc {
                if !b.is_finite() {
                    return Err(Error::Domain(format!("Robin parameter must be finite, got {b}")));
                }
            }
        }
        Ok(ChainOperator { cells, couplings, left_bc, right_bc, origin })
    }

    /// Single cell with the given end condition on both sides.
    pub fn single_cell(cell: Cell, bc: Boundary, origin: f64) -> Result<Self> {
        Self::new(vec![cell], Vec::new(), bc, bc, origin)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn couplings(&self) -> &[Jump] {
        &self.couplings
    }

    pub fn left_bc(&self) -> Boundary {
        self.left_bc
    }

    pub fn right_bc(&self) -> Boundary {
        self.right_bc
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn total_length(&self) -> f64 {
        self.cells.iter().map(|c| c.length).sum()
    }

    /// Positions of all interaction points and cell boundaries, starting at
    /// `origin` and ending at `origin + total_length`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(2 * self.cells.len() + 1);
        let mut x = self.origin;
        pts.push(x);
        for c in &self.cells {
            pts.push(x + c.length / 2.0);
            x += c.length;
            pts.push(x);
        }
        pts
    }

    /// True if any interior jump (cell or coupling) is a δ′ interaction.
    pub fn has_delta_prime(&self) -> bool {
        self.cells.iter().any(|c| matches!(c.jump, Jump::DeltaPrime(_)))
            || self.couplings.iter().any(|j| matches!(j, Jump::DeltaPrime(_)))
    }

    fn has_robin_end(&self) -> bool {
        matches!(self.left_bc, Boundary::Robin(_)) || matches!(self.right_bc, Boundary::Robin(_))
    }

    /// Split the chain at its walls into independent wall-free sub-chains.
    pub fn split_at_walls(&self) -> Vec<ChainOperator> {
        let mut parts = Vec::new();
        let mut cells = Vec::new();
        let mut couplings = Vec::new();
        let mut left = self.left_bc;
        let mut x0 = self.origin;
        for (i, c) in self.cells.iter().enumerate() {
            cells.push(*c);
            let boundary_after = if i < self.couplings.len() {
                Some(self.couplings[i])
            } else {
                None
            };
            match boundary_after {
                Some(j) if j.is_wall() => {
                    let bc = match j {
                        Jump::DirichletWall => Boundary::Dirichlet,
                        _ => Boundary::Neumann,
                    };
                    let len: f64 = cells.iter().map(|c| c.length).sum();
                    parts.push(ChainOperator {
                        cells: core::mem::take(&mut cells),
                        couplings: core::mem::take(&mut couplings),
                        left_bc: left,
                        right_bc: bc,
                        origin: x0,
                    });
                    left = bc;
                    x0 += len;
                }
                Some(j) => couplings.push(j),
                None => {}
            }
        }
        parts.push(ChainOperator {
            cells,
            couplings,
            left_bc: left,
            right_bc: self.right_bc,
            origin: x0,
        });
        parts
    }

    fn check_supported(&self) -> Result<()> {
        for part in self.split_at_walls() {
            if part.has_delta_prime() && part.has_robin_end() {
                return Err(Error::NotSupported(
                    "δ′ jumps combined with a Robin end in the same connected component".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Transfer matrices
// ---------------------------------------------------------------------------

/// 2×2 transfer matrix acting on `(u, u')ᵀ`.
pub type Transfer = [[f64; 2]; 2];

fn mat_mul(a: &Transfer, b: &Transfer) -> Transfer {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Transfer matrix of a free interval of length `t` at energy `lambda`.
pub fn free_transfer(t: f64, lambda: f64) -> Transfer {
    if lambda > 0.0 {
        let w = num::sqrt(lambda);
        let (s, c) = (num::sin(w * t), num::cos(w * t));
        [[c, s / w], [-w * s, c]]
    } else if lambda == 0.0 {
        [[1.0, t], [0.0, 1.0]]
    } else {
        let k = num::sqrt(-lambda);
        let e = num::exp(num::min(k * t, 700.0));
        let (ch, sh) = ((e + 1.0 / e) / 2.0, (e - 1.0 / e) / 2.0);
        [[ch, sh / k], [k * sh, ch]]
    }
}

/// Transfer matrix of a point jump.
pub fn jump_transfer(jump: Jump) -> Result<Transfer> {
    match jump {
        Jump::Delta(g) => Ok([[1.0, 0.0], [g, 1.0]]),
        Jump::DeltaPrime(g) => Ok([[1.0, g], [0.0, 1.0]]),
        _ => Err(Error::NotSupported("walls have no transfer matrix".into())),
    }
}

/// Transfer matrix of an entire wall-free chain at energy `lambda`
/// (left end to right end, boundary conditions not applied).
pub fn chain_transfer(op: &ChainOperator, lambda: f64) -> Result<Transfer> {
    if op.couplings.iter().any(|j| j.is_wall()) {
        return Err(Error::NotSupported(
            "transfer matrix of a chain with walls; split at walls first".into(),
        ));
    }
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for (i, c) in op.cells.iter().enumerate() {
        let half = free_transfer(c.length / 2.0, lambda);
        m = mat_mul(&half, &m);
        m = mat_mul(&jump_transfer(c.jump)?, &m);
        m = mat_mul(&half, &m);
        if i < op.couplings.len() {
            m = mat_mul(&jump_transfer(op.couplings[i])?, &m);
        }
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Prüfer phase
// ---------------------------------------------------------------------------

/// Continuous-phase representative of the difference `raw - base` in the
/// half-open interval `[lo, lo + width)`.
fn wrap_diff(diff: f64, lo: f64, width: f64) -> f64 {
    lo + num::rem_euclid(diff - lo, width)
}

/// Advance the continuous Prüfer phase across a free segment of length `t`.
fn advance_free(theta: f64, lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        return theta;
    }
    if lambda > 0.0 {
        // Scaled phase φ with tan φ = ω tan θ advances linearly: φ' = ω.
        let omega = num::sqrt(lambda);
        let k = num::floor(theta / PI);
        let psi = theta - k * PI;
        let phi_psi = num::atan2(omega * num::sin(psi), num::cos(psi));
        let phi = k * PI + phi_psi + omega * t;
        let m = num::floor(phi / PI);
        let chi = phi - m * PI;
        m * PI + num::atan2(num::sin(chi), omega * num::cos(chi))
    } else if lambda == 0.0 {
        // θ' = cos²θ ≥ 0 and the advance is strictly less than π.
        let (u, du) = (num::sin(theta), num::cos(theta));
        let raw = num::atan2(u + t * du, du);
        theta + wrap_diff(raw - theta, 0.0, PI)
    } else {
        // Hyperbolic regime: the total rotation is strictly inside (-π, π).
        let kappa = num::sqrt(-lambda);
        let (u, du) = (num::sin(theta), num::cos(theta));
        let a = 0.5 * (u + du / kappa);
        let b = 0.5 * (u - du / kappa);
        let e = if kappa * t > 350.0 { 0.0 } else { num::exp(-2.0 * kappa * t) };
        let u1 = a + b * e;
        let du1 = kappa * (a - b * e);
        let raw = num::atan2(u1, du1);
        theta + wrap_diff(raw - theta, -PI, 2.0 * PI)
    }
}

/// Apply a point jump to the phase.
///
/// A δ jump preserves `u`, so the sign of `sin θ` is unchanged and the phase
/// stays inside its current half-turn `(kπ, (k+1)π)`; a δ′ jump preserves
/// `u'` and keeps the phase inside `(kπ - π/2, kπ + π/2)`. Phases exactly on
/// the preserved axis are fixed points of the jump.
fn advance_jump(theta: f64, jump: Jump) -> f64 {
    match jump {
        Jump::Delta(g) => {
            let k = num::floor(theta / PI);
            let psi = theta - k * PI; // in [0, π), so sin ψ ≥ 0
            let s = num::sin(psi);
            if s == 0.0 {
                return theta;
            }
            let c = num::cos(psi);
            k * PI + num::atan2(s, c + g * s)
        }
        Jump::DeltaPrime(g) => {
            let k = num::floor(theta / PI + 0.5);
            let psi = theta - k * PI; // in [-π/2, π/2), so cos ψ ≥ 0
            let c = num::cos(psi);
            if c == 0.0 {
                return theta;
            }
            let s = num::sin(psi);
            k * PI + num::atan2(s + g * c, c)
        }
        _ => theta,
    }
}

fn left_phase(bc: Boundary) -> f64 {
    match bc {
        Boundary::Dirichlet => 0.0,
        Boundary::Neumann => PI / 2.0,
        Boundary::Robin(beta) => num::atan2(1.0, 0.5 * beta),
    }
}

/// Terminal phase value at which the right boundary condition is met for the
/// first time; eigenvalues correspond to `θ_end = γ_R + kπ`, `k ≥ 0`.
fn right_phase(bc: Boundary) -> f64 {
    match bc {
        Boundary::Dirichlet => PI,
        Boundary::Neumann => PI / 2.0,
        Boundary::Robin(beta) => num::atan2(1.0, -0.5 * beta),
    }
}

fn terminal_phase(op: &ChainOperator, lambda: f64) -> f64 {
    let mut theta = left_phase(op.left_bc);
    for (i, c) in op.cells.iter().enumerate() {
        theta = advance_free(theta, lambda, c.length / 2.0);
        theta = advance_jump(theta, c.jump);
        theta = advance_free(theta, lambda, c.length / 2.0);
        if i < op.couplings.len() {
            theta = advance_jump(theta, op.couplings[i]);
        }
    }
    theta
}

/// Number of eigenvalues of the chain strictly below `lambda`.
///
/// If `lambda` happens to sit (numerically) exactly on an eigenvalue it is
/// nudged downward by a relative `1e-12` so the count stays well-defined.
pub fn count_below(op: &ChainOperator, lambda: f64) -> Result<usize> {
    op.check_supported()?;
    if !lambda.is_finite() {
        return Err(Error::Domain(format!("count requested at non-finite lambda {lambda}")));
    }
    let mut total = 0;
    for part in op.split_at_walls() {
        total += count_below_connected(&part, lambda);
    }
    Ok(total)
}

fn count_below_connected(op: &ChainOperator, lambda: f64) -> usize {
    let gamma_r = right_phase(op.right_bc);
    let mut lam = lambda;
    for _ in 0..4 {
        let theta = terminal_phase(op, lam);
        let dist = num::abs(wrap_diff(theta - gamma_r, -PI / 2.0, PI));
        if dist > 1e-12 {
            return phase_count(theta, gamma_r);
        }
        lam -= EIGEN_NUDGE_REL * (1.0 + num::abs(lam));
    }
    phase_count(terminal_phase(op, lam), gamma_r)
}

fn phase_count(theta_end: f64, gamma_r: f64) -> usize {
    if theta_end > gamma_r {
        (num::floor((theta_end - gamma_r) / PI) as isize + 1).max(0) as usize
    } else {
        0
    }
}

/// Secular value of the chain at `lambda`: a continuous function whose zeros
/// inside a connected (wall-free) component are exactly its eigenvalues.
///
/// For a chain with walls the product over components is returned, so zeros
/// still coincide with the merged spectrum. The solution is renormalized
/// while propagating, so only zeros and signs are meaningful, not magnitudes.
pub fn secular_value(op: &ChainOperator, lambda: f64) -> Result<f64> {
    op.check_supported()?;
    let mut product = 1.0;
    for part in op.split_at_walls() {
        product *= secular_connected(&part, lambda)?;
    }
    Ok(product)
}

fn secular_connected(op: &ChainOperator, lambda: f64) -> Result<f64> {
    let theta0 = left_phase(op.left_bc);
    let (mut u, mut du) = (num::sin(theta0), num::cos(theta0));
    let step = |m: Transfer, u: &mut f64, du: &mut f64| {
        let (nu, ndu) = (m[0][0] * *u + m[0][1] * *du, m[1][0] * *u + m[1][1] * *du);
        let scale = num::max(num::abs(nu), num::abs(ndu));
        if scale > 1e100 {
            *u = nu / scale;
            *du = ndu / scale;
        } else {
            *u = nu;
            *du = ndu;
        }
    };
    for (i, c) in op.cells.iter().enumerate() {
        let half = free_transfer(c.length / 2.0, lambda);
        step(half, &mut u, &mut du);
        step(jump_transfer(c.jump)?, &mut u, &mut du);
        step(half, &mut u, &mut du);
        if i < op.couplings.len() {
            step(jump_transfer(op.couplings[i])?, &mut u, &mut du);
        }
    }
    let norm = num::max(num::abs(u), num::abs(du));
    if norm > 0.0 {
        u /= norm;
        du /= norm;
    }
    Ok(match op.right_bc {
        Boundary::Dirichlet => u,
        Boundary::Neumann => du,
        Boundary::Robin(beta) => du + 0.5 * beta * u,
    })
}

// ---------------------------------------------------------------------------
// Windowed eigenvalue location
// ---------------------------------------------------------------------------

/// One located eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub value: f64,
    /// Final bisection bracket `[lo, hi]` containing the eigenvalue.
    pub bracket: (f64, f64),
    /// Number of coincident eigenvalues represented by this record.
    pub multiplicity: usize,
    /// Secular residual at `value` (renormalized scale).
    pub residual: f64,
}

/// Windowed spectrum with an integer count certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub window: (f64, f64),
    pub eigenvalues: Vec<Eigenvalue>,
    /// `count_below` at the window edges; their difference equals the total
    /// multiplicity of the located eigenvalues.
    pub count_at_lower: usize,
    pub count_at_upper: usize,
}

impl SpectrumReport {
    /// Total multiplicity of all located eigenvalues.
    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }
}

/// Locate all eigenvalues of `op` in the open window `(lower, upper)`.
///
/// `lower = f64::NEG_INFINITY` is accepted and replaced by a finite floor
/// found by doubling downward until the count vanishes. Each eigenvalue is
/// located to `|Δλ| ≤ tol` by count-driven bisection.
pub fn eigenvalues_in(op: &ChainOperator, window: (f64, f64), tol: f64) -> Result<SpectrumReport> {
    op.check_supported()?;
    let (mut lower, upper) = window;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !upper.is_finite() {
        return Err(Error::Domain(format!("window upper edge must be finite, got {upper}")));
    }
    if lower == f64::NEG_INFINITY {
        lower = spectral_floor(op, upper)?;
    }
    if !lower.is_finite() || lower > upper {
        return Err(Error::Domain(format!("bad window ({lower}, {upper})")));
    }

    let mut all: Vec<Eigenvalue> = Vec::new();
    let mut count_lo = 0;
    let mut count_hi = 0;
    for part in op.split_at_walls() {
        let n_lo = count_below_connected(&part, lower);
        let n_hi = count_below_connected(&part, upper);
        count_lo += n_lo;
        count_hi += n_hi;
        let mut found = Vec::new();
        isolate(&part, lower, upper, n_lo, n_hi, tol, &mut found, 0)?;
        for (value, bracket, multiplicity) in found {
            let residual = num::abs(secular_connected(&part, value)?);
            all.push(Eigenvalue { value, bracket, multiplicity, residual });
        }
    }

    Ok(SpectrumReport {
        window: (lower, upper),
        eigenvalues: merge_records(all),
        count_at_lower: count_lo,
        count_at_upper: count_hi,
    })
}

/// Sort located eigenvalues and merge coincident values from different
/// decoupled components into multiplicities.
fn merge_records(mut all: Vec<Eigenvalue>) -> Vec<Eigenvalue> {
    all.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut out: Vec<Eigenvalue> = Vec::new();
    for e in all {
        if let Some(last) = out.last_mut() {
            let eps = MERGE_EPS_REL * num::max(1.0, num::abs(e.value));
            if num::abs(e.value - last.value) <= eps {
                last.multiplicity += e.multiplicity;
                last.bracket = (
                    num::min(last.bracket.0, e.bracket.0),
                    num::max(last.bracket.1, e.bracket.1),
                );
                continue;
            }
        }
        out.push(e);
    }
    out
}

/// Finite lower bound below the whole spectrum: doubles downward until the
/// eigenvalue count vanishes.
pub fn spectral_floor(op: &ChainOperator, upper: f64) -> Result<f64> {
    let mut lo = num::min(0.0, upper) - 1.0;
    for _ in 0..200 {
        if count_below(op, lo)? == 0 {
            return Ok(lo);
        }
        lo = 2.0 * lo - 1.0;
    }
    Err(Error::Convergence("could not find a finite floor below the spectrum".into()))
}

/// Recursive count-driven bisection on a connected chain; pushes
/// `(value, bracket, multiplicity)` triples.
fn isolate(
    op: &ChainOperator,
    lo: f64,
    hi: f64,
    n_lo: usize,
    n_hi: usize,
    tol: f64,
    out: &mut Vec<(f64, (f64, f64), usize)>,
    depth: usize,
) -> Result<()> {
    if n_hi <= n_lo {
        return Ok(());
    }
    if hi - lo <= tol || depth > 200 {
        out.push((0.5 * (lo + hi), (lo, hi), n_hi - n_lo));
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    if mid <= lo || mid >= hi {
        out.push((mid, (lo, hi), n_hi - n_lo));
        return Ok(());
    }
    let n_mid = count_below_connected(op, mid);
    isolate(op, lo, mid, n_lo, n_mid, tol, out, depth + 1)?;
    isolate(op, mid, hi, n_mid, n_hi, tol, out, depth + 1)
}

/// Merge the (sorted) spectra of independent components inside a window,
/// combining coincident values into multiplicities and flagging clusters
/// that indicate spectral accumulation.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedSpectrum {
    pub values: Vec<(f64, usize)>,
    /// Centers of dense clusters (≥ 20 values within a relative 1e-3 span),
    /// a numerical hint of essential-spectrum accumulation.
    pub accumulation_hints: Vec<f64>,
}

pub fn merge_decoupled(lists: &[Vec<f64>], window: (f64, f64)) -> MergedSpectrum {
    let mut all: Vec<f64> = lists
        .iter()
        .flat_map(|l| l.iter().copied())
        .filter(|&v| v > window.0 && v < window.1)
        .collect();
    all.sort_by(f64::total_cmp);
    let mut values: Vec<(f64, usize)> = Vec::new();
    for v in &all {
        if let Some(last) = values.last_mut() {
            if num::abs(v - last.0) <= MERGE_EPS_REL * num::max(1.0, num::abs(*v)) {
                last.1 += 1;
                continue;
            }
        }
        values.push((*v, 1));
    }
    let mut hints = Vec::new();
    const CLUSTER: usize = 20;
    let mut i = 0;
    while i + CLUSTER <= all.len() {
        let span = all[i + CLUSTER - 1] - all[i];
        let center = 0.5 * (all[i + CLUSTER - 1] + all[i]);
        if span <= 1e-3 * num::max(1.0, num::abs(center)) {
            if hints
                .last()
                .map_or(true, |&h: &f64| num::abs(h - center) > 1e-2 * num::max(1.0, num::abs(center)))
            {
                hints.push(center);
            }
        }
        i += 1;
    }
    MergedSpectrum { values, accumulation_hints: hints }
}

// ---------------------------------------------------------------------------

/// Convenience: spectrum of a chain made of the given cells fully decoupled
/// by Dirichlet walls (each cell solved on its own), merged in the window.
pub fn decoupled_spectrum(
    cells: &[Cell],
    bc: Boundary,
    window: (f64, f64),
    tol: f64,
) -> Result<MergedSpectrum> {
    let mut lists = Vec::with_capacity(cells.len());
    for c in cells {
        let op = ChainOperator::single_cell(*c, bc, 0.0)?;
        let report = eigenvalues_in(&op, window, tol)?;
        lists.push(report.eigenvalues.iter().map(|e| e.value).collect());
    }
    Ok(merge_decoupled(&lists, window))
}
