//! Independent finite-difference oracle for chain operators.
//!
//! The oracle discretizes `-u''` plus its δ interactions by a lumped-mass
//! finite-element scheme on a near-uniform grid: every cell gets an even
//! number of equal sub-intervals, so all interaction points (cell boundaries
//! and midpoints) land exactly on grid nodes. With stiffness `K` (springs
//! `1/h` plus the point terms `γ·u(z)²` and Robin terms `½β·u(end)²`) and
//! diagonal lumped mass `M`, the discrete eigenproblem `K v = λ M v` is
//! symmetrized to the tridiagonal matrix `T = M^{-1/2} K M^{-1/2}`, whose
//! eigenvalues are found by Sturm-sequence bisection.
//!
//! [`oracle_eigenvalues`] refines the grid by successive halvings and applies
//! Richardson extrapolation with an empirically fitted convergence order,
//! returning each eigenvalue with an error estimate. The oracle shares no
//! code with the closed-form and Prüfer solvers, which is what makes it a
//! useful cross-check.

use crate::chain::{Boundary, ChainOperator, Jump};
use crate::error::Error;
use crate::num;
use crate::Result;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Guard applied to near-zero pivots in the Sturm sequence.
const STURM_PIVOT_GUARD: f64 = 1e-280;

/// Symmetric tridiagonal discretization of a wall-free chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProblem {
    /// Coarsest step actually used (cells may use slightly different steps so
    /// that interaction points sit exactly on nodes).
    pub h: f64,
    pub diag: Vec<f64>,
    pub off_diag: Vec<f64>,
    /// Matrix row index of each δ interaction (cell midpoints, then
    /// couplings, in chain order).
    pub interaction_rows: Vec<usize>,
}

/// One extrapolated eigenvalue from the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEigenvalue {
    /// Richardson-extrapolated value.
    pub value: f64,
    /// Estimated absolute error of `value`.
    pub error_estimate: f64,
    /// Fitted convergence order (≈2 for smooth data, degraded toward 1 by
    /// strong point terms).
    pub order: f64,
}

/// Default refinement ladder: three grids at `L/2^12`, `L/2^13`, `L/2^14`.
pub fn default_steps(total_length: f64) -> [f64; 3] {
    [
        total_length / 4096.0,
        total_length / 8192.0,
        total_length / 16384.0,
    ]
}

fn check_oracle_supported(op: &ChainOperator) -> Result<()> {
    if op.has_delta_prime() {
        return Err(Error::NotSupported(
            "the finite-difference oracle does not handle δ′ jumps".into(),
        ));
    }
    Ok(())
}

/// Even number of sub-intervals per cell for a target step `h`.
fn cell_subdivisions(op: &ChainOperator, h: f64) -> Result<Vec<usize>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Grid(format!("grid step must be positive and finite, got {h}")));
    }
    Ok(op
        .cells()
        .iter()
        .map(|c| {
            let half = num::round(c.length / (2.0 * h)) as usize;
            2 * half.max(1)
        })
        .collect())
}

/// Discretize a wall-free chain with the given per-cell sub-interval counts
/// (each even, so midpoints are on nodes).
fn assemble(op: &ChainOperator, subdivisions: &[usize]) -> Result<GridProblem> {
    check_oracle_supported(op)?;
    if op.couplings().iter().any(|j| matches!(j, Jump::DirichletWall | Jump::NeumannWall)) {
        return Err(Error::NotSupported(
            "discretize expects a wall-free chain; split at walls first".into(),
        ));
    }
    debug_assert_eq!(subdivisions.len(), op.cells().len());

    // Per-interval steps, flattened over all cells, plus the node indices of
    // the δ interactions.
    let total_nodes: usize = subdivisions.iter().sum::<usize>() + 1;
    let mut steps = Vec::with_capacity(total_nodes - 1);
    let mut interactions: Vec<(usize, f64)> = Vec::new();
    let mut node = 0usize;
    let mut h_max: f64 = 0.0;
    for (i, (c, &n)) in op.cells().iter().zip(subdivisions).enumerate() {
        let hc = c.length / n as f64;
        h_max = num::max(h_max, hc);
        for _ in 0..n {
            steps.push(hc);
        }
        if let Jump::Delta(g) = c.jump {
            interactions.push((node + n / 2, g));
        }
        node += n;
        if i < op.couplings().len() {
            if let Jump::Delta(g) = op.couplings()[i] {
                interactions.push((node, g));
            }
        }
    }

    // Stiffness diagonal/off-diagonal and lumped masses over all nodes.
    let n_nodes = steps.len() + 1;
    let mut k_diag = vec![0.0; n_nodes];
    let mut k_off = vec![0.0; steps.len()];
    let mut mass = vec![0.0; n_nodes];
    for (i, &h) in steps.iter().enumerate() {
        let spring = 1.0 / h;
        k_diag[i] += spring;
        k_diag[i + 1] += spring;
        k_off[i] = -spring;
        mass[i] += h / 2.0;
        mass[i + 1] += h / 2.0;
    }
    for &(row, g) in &interactions {
        k_diag[row] += g;
    }
    if let Boundary::Robin(beta) = op.left_bc() {
        k_diag[0] += 0.5 * beta;
    }
    if let Boundary::Robin(beta) = op.right_bc() {
        k_diag[n_nodes - 1] += 0.5 * beta;
    }

    // Dirichlet ends drop the boundary node.
    let drop_left = matches!(op.left_bc(), Boundary::Dirichlet);
    let drop_right = matches!(op.right_bc(), Boundary::Dirichlet);
    let lo = usize::from(drop_left);
    let hi = n_nodes - usize::from(drop_right);
    if hi <= lo + 1 {
        return Err(Error::Grid("grid too coarse: no interior nodes remain".into()));
    }

    let mut diag = Vec::with_capacity(hi - lo);
    let mut off_diag = Vec::with_capacity(hi - lo - 1);
    for i in lo..hi {
        diag.push(k_diag[i] / mass[i]);
        if i + 1 < hi {
            off_diag.push(k_off[i] / num::sqrt(mass[i] * mass[i + 1]));
        }
    }
    let interaction_rows = interactions.iter().map(|&(row, _)| row - lo).collect();
    Ok(GridProblem { h: h_max, diag, off_diag, interaction_rows })
}

/// Discretize a wall-free chain with target step `h`.
///
/// Every cell is cut into an even number of equal sub-intervals whose step is
/// within a factor of two of `h`, so all interaction points are grid nodes
/// and a δ of strength `γ` contributes `γ/h` to exactly one diagonal entry
/// (up to the lumped-mass weight at that node).
pub fn discretize(op: &ChainOperator, h: f64) -> Result<GridProblem> {
    let subs = cell_subdivisions(op, h)?;
    assemble(op, &subs)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// `lambda`, via the LDLᵀ Sturm sequence (count of negative pivots).
pub fn sturm_count(diag: &[f64], off_diag: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if num::abs(q) < STURM_PIVOT_GUARD {
            if q >= 0.0 {
                STURM_PIVOT_GUARD
            } else {
                -STURM_PIVOT_GUARD
            }
        } else {
            q
        };
        q = (diag[i] - lambda) - off_diag[i - 1] * off_diag[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `count` eigenvalues of the grid problem, ascending, by Sturm
/// bisection inside the Gershgorin bounds.
pub fn lowest_eigenvalues(gp: &GridProblem, count: usize) -> Vec<f64> {
    let n = gp.diag.len();
    let want = count.min(n);
    if want == 0 {
        return Vec::new();
    }
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        let e_left = if i > 0 { num::abs(gp.off_diag[i - 1]) } else { 0.0 };
        let e_right = if i < n - 1 { num::abs(gp.off_diag[i]) } else { 0.0 };
        lo = num::min(lo, gp.diag[i] - e_left - e_right);
        hi = num::max(hi, gp.diag[i] + e_left + e_right);
    }
    lo -= 1.0;
    hi += 1.0;

    let mut out = Vec::with_capacity(want);
    for k in 0..want {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (b - a) < 2.0 * f64::EPSILON * num::max(num::abs(mid), 1.0) {
                break;
            }
            if sturm_count(&gp.diag, &gp.off_diag, mid) <= k {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Lowest `count` eigenvalues of `op` on a grid refined by `factor` relative
/// to the base subdivisions derived from `h0`. Walls split the chain; the
/// merged list is globally sorted.
pub fn level_eigenvalues(op: &ChainOperator, h0: f64, factor: usize, count: usize) -> Result<Vec<f64>> {
    check_oracle_supported(op)?;
    let mut all = Vec::new();
    for part in op.split_at_walls() {
        let base = cell_subdivisions(&part, h0)?;
        let refined: Vec<usize> = base.iter().map(|&n| n * factor).collect();
        let gp = assemble(&part, &refined)?;
        all.extend(lowest_eigenvalues(&gp, count));
    }
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    Ok(all)
}

/// Lowest `count` eigenvalues of `op` with Richardson-extrapolated values and
/// error estimates, using the refinement ladder `hs` (each step half of the
/// previous; the last three levels feed the extrapolation).
pub fn oracle_eigenvalues(
    op: &ChainOperator,
    count: usize,
    hs: &[f64],
) -> Result<Vec<OracleEigenvalue>> {
    check_ladder(hs)?;
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(hs.len());
    for (i, _) in hs.iter().enumerate() {
        levels.push(level_eigenvalues(op, hs[0], 1 << i, count)?);
    }
    oracle_from_levels(op, hs, &levels)
}

fn check_ladder(hs: &[f64]) -> Result<()> {
    if hs.len() < 2 {
        return Err(Error::Grid("need at least two refinement levels".into()));
    }
    for w in hs.windows(2) {
        let ratio = w[0] / w[1];
        if num::abs(ratio - 2.0) > 1e-9 {
            return Err(Error::Grid(format!(
                "refinement levels must halve the step; got ratio {ratio}"
            )));
        }
    }
    Ok(())
}

/// Extrapolate a precomputed refinement ladder (level `i` refined by `2^i`
/// relative to `hs[0]`, as produced by [`level_eigenvalues`]). Lets callers
/// compute the levels concurrently and still get the standard error model.
pub fn oracle_from_levels(
    op: &ChainOperator,
    hs: &[f64],
    levels: &[Vec<f64>],
) -> Result<Vec<OracleEigenvalue>> {
    check_oracle_supported(op)?;
    check_ladder(hs)?;
    if levels.len() != hs.len() {
        return Err(Error::Grid(format!(
            "expected {} level lists, got {}",
            hs.len(),
            levels.len()
        )));
    }
    // Floating-point floor of the Sturm bisection: eigenvalues carry an
    // absolute uncertainty of a few ulps of the matrix norm, which on fine
    // grids (norm ~ 4/h²) rivals the discretization error itself.
    let finest = 1usize << (hs.len() - 1);
    let mut norm_bound = 0.0f64;
    for part in op.split_at_walls() {
        let base = cell_subdivisions(&part, hs[0])?;
        let refined: Vec<usize> = base.iter().map(|&n| n * finest).collect();
        let gp = assemble(&part, &refined)?;
        let n = gp.diag.len();
        for i in 0..n {
            let e_left = if i > 0 { num::abs(gp.off_diag[i - 1]) } else { 0.0 };
            let e_right = if i < n - 1 { num::abs(gp.off_diag[i]) } else { 0.0 };
            norm_bound = num::max(norm_bound, num::abs(gp.diag[i]) + e_left + e_right);
        }
    }
    let roundoff_floor = 8.0 * f64::EPSILON * norm_bound;

    let m = levels.iter().map(|l| l.len()).min().unwrap_or(0);
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut e = extrapolate(levels.iter().map(|l| l[j]).collect::<Vec<_>>().as_slice());
        e.error_estimate = num::max(e.error_estimate, roundoff_floor);
        out.push(e);
    }
    Ok(out)
}

/// Richardson extrapolation with fitted order from the last three levels.
fn extrapolate(values: &[f64]) -> OracleEigenvalue {
    let n = values.len();
    let v2 = values[n - 1];
    let v1 = values[n - 2];
    let d1 = v2 - v1;
    let scale = 1.0 + num::abs(v2);
    if num::abs(d1) < 1e-14 * scale {
        return OracleEigenvalue {
            value: v2,
            error_estimate: num::max(num::abs(d1), 1e-13 * scale),
            order: 2.0,
        };
    }
    let order = if n >= 3 {
        let d0 = v1 - values[n - 3];
        if num::abs(d0) > 0.0 && d0 * d1 > 0.0 {
            let p = num::log2(num::abs(d0 / d1));
            num::min(num::max(p, 0.5), 4.0)
        } else {
            1.0
        }
    } else {
        2.0
    };
    let gain = num::powf(2.0, order) - 1.0;
    let value = v2 + d1 / gain;
    // Base estimate: the extrapolation correction itself. When three levels
    // are available, also compare against the extrapolant of the coarser
    // pair — their disagreement flags an imperfect order fit.
    let mut error_estimate = num::abs(value - v2);
    if n >= 3 {
        let prev = v1 + (v1 - values[n - 3]) / gain;
        error_estimate = num::max(error_estimate, num::abs(value - prev));
    }
    OracleEigenvalue {
        value,
        error_estimate: num::max(error_estimate, 1e-13 * scale),
        order,
    }
}
