//! Inverse spectral synthesis: build a chain of δ-interaction cells whose
//! spectrum inside a prescribed window matches given targets.
//!
//! The construction mirrors the direct decomposition of a decoupled chain:
//! every cell `k` has one eigenvalue `s_k` below its first pole, adjustable
//! through the δ strength `α_k = F_{d_k}(s_k)`, while all other cell
//! eigenvalues sit above the window because the cell lengths satisfy
//! `(π/d_k)² > max(T₂, s_k, 1)`. Cells with `k ≤ 0` carry a deterministic
//! generator sequence that accumulates on the essential-spectrum template;
//! cells with `k ≥ 1` carry the discrete targets.
//!
//! Finitely many cells around the origin are then joined by strong δ
//! couplings of strength `β_k` instead of rigid walls. The coupling schedule
//! keeps the perturbation of the decoupled spectrum under control; if the
//! certified localization fails numerically, the couplings are escalated by
//! a fixed factor and re-checked. Finally the strengths `α_k` of the coupled
//! target cells are tuned inside their admissible boxes
//! `[F(s_k - δ_k/2), F(s_k + δ_k/2)]` by a monotone Gauss–Seidel bisection
//! until each window eigenvalue agrees with its target.

use crate::chain::{self, Boundary, Cell, ChainOperator, Jump, SpectrumReport};
use crate::closed_forms::secular_dirichlet;
use crate::error::Error;
use crate::num;
use crate::Result;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Safety factor keeping `(π/d_k)²` strictly above the window top even when
/// the length bound binds exactly.
const LENGTH_MARGIN: f64 = 0.999;

/// Relative inset used to push generator values off the boundary of the
/// essential-spectrum interior.
const INTERIOR_INSET: f64 = 1e-3;

/// Factor keeping generator neighborhoods strictly inside their headroom.
const GAP_FACTOR: f64 = 0.9;

/// Factor turning the free gap around a target into a localization radius;
/// below 1/2 so that the radius-δ balls of two targets stay disjoint.
const BALL_FACTOR: f64 = 0.45;

/// A prescribed window spectrum: essential-spectrum template (intervals and
/// isolated points), discrete targets, and the observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTarget {
    pub ess_intervals: Vec<(f64, f64)>,
    pub ess_points: Vec<f64>,
    pub disc: Vec<f64>,
    /// Open window `(T₁, T₂)`.
    pub window: (f64, f64),
}

impl SpectralTarget {
    /// Check admissibility: the essential template must be non-empty and meet
    /// the closed window in a set that is the closure of its open interior,
    /// and the discrete targets must be distinct points of the open window
    /// away from that closure.
    pub fn validate(&self) -> Result<()> {
        let (t1, t2) = self.window;
        if !t1.is_finite() || !t2.is_finite() || !(t1 < t2) {
            return Err(Error::Spec(format!("window ({t1}, {t2}) is not a finite open interval")));
        }
        if self.ess_intervals.is_empty() && self.ess_points.is_empty() {
            return Err(Error::Spec("essential-spectrum template is empty".into()));
        }
        for &(a, b) in &self.ess_intervals {
            if !a.is_finite() || !b.is_finite() || !(a < b) {
                return Err(Error::Spec(format!("bad essential interval ({a}, {b})")));
            }
            // Touching the closed window in a single point would create an
            // isolated point of the windowed essential spectrum.
            if a == t2 || b == t1 {
                return Err(Error::Spec(format!(
                    "essential interval ({a}, {b}) touches the window only at an endpoint"
                )));
            }
        }
        for &p in &self.ess_points {
            if !p.is_finite() {
                return Err(Error::Spec(format!("non-finite essential point {p}")));
            }
            if p >= t1 && p <= t2 {
                return Err(Error::Spec(format!(
                    "essential point {p} is isolated inside the closed window [{t1}, {t2}]"
                )));
            }
        }
        let interior = self.open_interior();
        for (i, &s) in self.disc.iter().enumerate() {
            if !s.is_finite() || s <= t1 || s >= t2 {
                return Err(Error::Spec(format!(
                    "discrete target {s} is not strictly inside the window ({t1}, {t2})"
                )));
            }
            for &(a, b) in &self.ess_intervals {
                let lo = num::max(a, t1);
                let hi = num::min(b, t2);
                if lo <= hi && s >= lo && s <= hi {
                    return Err(Error::Spec(format!(
                        "discrete target {s} lies inside the windowed essential spectrum"
                    )));
                }
            }
            for (j, &other) in self.disc.iter().enumerate() {
                if j != i && !(num::abs(s - other) > 1e-12 * num::max(1.0, num::abs(s))) {
                    return Err(Error::Spec(format!("discrete targets {s} and {other} coincide")));
                }
            }
        }
        let _ = interior;
        Ok(())
    }

    /// Open interior of the windowed essential spectrum: the interval
    /// components clipped to the open window.
    pub fn open_interior(&self) -> Vec<(f64, f64)> {
        let (t1, t2) = self.window;
        self.ess_intervals
            .iter()
            .filter_map(|&(a, b)| {
                let lo = num::max(a, t1);
                let hi = num::min(b, t2);
                if lo < hi {
                    Some((lo, hi))
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Tunable knobs of the synthesis pipeline, with the standard defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisParams {
    /// Geometric decay applied to the cell lengths with the index modulus.
    pub decay_ratio: f64,
    /// Hard cap on any single cell length.
    pub length_cap: f64,
    /// Exponent slack in the coupling schedule.
    pub epsilon: f64,
    /// Multiplier applied to the couplings in each escalation round.
    pub escalation_factor: f64,
    pub max_escalation_rounds: usize,
    /// Absolute tolerance for eigenvalue location.
    pub eig_tol: f64,
    /// Tolerance on `|located - target|` for the strength tuning.
    pub tune_tol: f64,
    pub max_sweeps: usize,
    /// Number of extra decoupled generator cells beyond the coupled block
    /// (`None` → same as the truncation level).
    pub tail: Option<usize>,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            decay_ratio: 0.5,
            length_cap: 1.0,
            epsilon: 1.0,
            escalation_factor: 4.0,
            max_escalation_rounds: 60,
            eig_tol: 1e-9,
            tune_tol: 1e-8,
            max_sweeps: 200,
            tail: None,
        }
    }
}

/// A sequence indexed by cell index `k` over a contiguous range
/// `[k_min, k_max]` (negative indices are generator cells).
#[derive(Debug, Clone, PartialEq)]
pub struct KSeq {
    k_min: i64,
    vals: Vec<f64>,
}

impl KSeq {
    fn filled(k_min: i64, k_max: i64, v: f64) -> Self {
        let len = (k_max - k_min + 1).max(0) as usize;
        KSeq { k_min, vals: vec![v; len] }
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.vals.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> f64 {
        self.vals[(k - self.k_min) as usize]
    }

    pub fn set(&mut self, k: i64, v: f64) {
        self.vals[(k - self.k_min) as usize] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.vals.iter().enumerate().map(move |(i, &v)| (self.k_min + i as i64, v))
    }
}

// ---------------------------------------------------------------------------
// Generator sequence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum Component {
    Point(f64),
    Interval(f64, f64),
}

/// Deterministic sequence accumulating exactly on the essential template.
///
/// Components are visited round-robin; isolated points repeat every pass,
/// intervals emit their dyadic mesh of pass level `ℓ` (new odd-numerator
/// points first, then the coarser points again), so every mesh point recurs
/// infinitely often and the accumulation set of the infinite sequence is the
/// whole template.
pub fn generate_ess_sequence(target: &SpectralTarget, n: usize) -> Result<Vec<f64>> {
    if target.ess_intervals.is_empty() && target.ess_points.is_empty() {
        return Err(Error::Spec("essential-spectrum template is empty".into()));
    }
    let mut comps: Vec<Component> = target
        .ess_points
        .iter()
        .map(|&p| Component::Point(p))
        .chain(target.ess_intervals.iter().map(|&(a, b)| Component::Interval(a, b)))
        .collect();
    comps.sort_by(|x, y| start_of(x).total_cmp(&start_of(y)));

    let mut out = Vec::with_capacity(n);
    let mut level: u32 = 0;
    while out.len() < n {
        // Per-component emission lists for this pass.
        let lists: Vec<Vec<f64>> = comps.iter().map(|c| pass_list(c, level)).collect();
        let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
        'pass: for i in 0..longest {
            for list in &lists {
                if let Some(&v) = list.get(i) {
                    out.push(v);
                    if out.len() == n {
                        break 'pass;
                    }
                }
            }
        }
        level = level.saturating_add(1);
        if level > 60 {
            break; // meshes are below double-precision resolution by now
        }
    }
    // Template of isolated points only and more values requested than passes:
    // keep cycling the points.
    let mut idx = 0;
    while out.len() < n {
        out.push(out[idx]);
        idx += 1;
    }
    Ok(out)
}

fn start_of(c: &Component) -> f64 {
    match c {
        Component::Point(p) => *p,
        Component::Interval(a, _) => *a,
    }
}

fn pass_list(c: &Component, level: u32) -> Vec<f64> {
    match *c {
        Component::Point(p) => vec![p],
        Component::Interval(a, b) => {
            if level == 0 {
                return vec![a, b];
            }
            let steps = 1u64 << level.min(52);
            let w = (b - a) / steps as f64;
            let mut pts = Vec::with_capacity(steps as usize + 1);
            // New refinements first, then the coarser mesh again.
            for j in (1..steps).step_by(2) {
                pts.push(a + j as f64 * w);
            }
            for j in (0..=steps).step_by(2) {
                pts.push(a + j as f64 * w);
            }
            pts
        }
    }
}

// ---------------------------------------------------------------------------
// Lengths, neighborhoods, coupling schedule
// ---------------------------------------------------------------------------

/// Cell length for target `s_k` at index `k`:
/// `min(0.999·π/√max(T₂, s_k, 1), cap) · ratio^{|k|}`, which keeps both
/// `(π/d_k)² > T₂` and `(π/d_k)² > s_k` with summable lengths.
pub fn cell_length(s_k: f64, t2: f64, params: &SynthesisParams, k: i64) -> f64 {
    let scale = num::max(t2, num::max(s_k, 1.0));
    let base = num::min(
        LENGTH_MARGIN * core::f64::consts::PI / num::sqrt(scale),
        params.length_cap,
    );
    base * num::powf(params.decay_ratio, num::abs(k as f64))
}

/// Coupling-strength schedule `β_k = 1/min(D_k^{5+ε}, D_{k+1}²·D_k^{3+ε})`
/// with `D_k = min(d_k, d_{k+1})` (indices outside the range fall back to the
/// nearest cell length).
pub fn coupling_schedule(d: &KSeq, epsilon: f64) -> KSeq {
    let mut beta = KSeq::filled(d.k_min(), d.k_max() - 1, 0.0);
    for k in beta.k_min()..=beta.k_max() {
        let dk1 = d.get(k + 1);
        let big_d_k = num::min(d.get(k), dk1);
        let big_d_k1 = if k + 2 <= d.k_max() {
            num::min(dk1, d.get(k + 2))
        } else {
            dk1
        };
        let a = num::powf(big_d_k, 5.0 + epsilon);
        let b = big_d_k1 * big_d_k1 * num::powf(big_d_k, 3.0 + epsilon);
        beta.set(k, 1.0 / num::min(a, b));
    }
    beta
}

/// Resolvent-control indicator of the schedule at coupling `k`:
/// `ρ_k = (1/D_k²)·max(1/(β_k·D_k³), 1/(β_{k-1}·D_{k-1}³))`; it tends to
/// zero along the scheduled couplings as `|k|` grows.
pub fn schedule_rho(d: &KSeq, beta: &KSeq, k: i64) -> f64 {
    let big_d = |k: i64| {
        if k + 1 <= d.k_max() {
            num::min(d.get(k), d.get(k + 1))
        } else {
            d.get(k)
        }
    };
    let term = |k: i64| 1.0 / (beta.get(k) * num::powf(big_d(k), 3.0));
    let dk = big_d(k);
    let prev = if k - 1 >= beta.k_min() { term(k - 1) } else { term(k) };
    (1.0 / (dk * dk)) * num::max(term(k), prev)
}

// ---------------------------------------------------------------------------
// Synthesis state
// ---------------------------------------------------------------------------

/// All derived data of the construction at one truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisState {
    pub target: SpectralTarget,
    pub params: SynthesisParams,
    /// Truncation level: cells `-n+1 ..= min(n, m)` are coupled.
    pub n: usize,
    /// Extra decoupled generator cells beyond the coupled block.
    pub tail: usize,
    /// Targets per cell (generator values for `k ≤ 0`, discrete for `k ≥ 1`).
    pub s: KSeq,
    pub d: KSeq,
    /// Localization radii: the protected ball of cell `k` is
    /// `(s_k - δ_k, s_k + δ_k)`; the strength box corners sit at the
    /// half-radius points `s_k ± δ_k/2`, so the corner eigenvalues stay
    /// strictly inside the ball under coupling.
    pub delta: KSeq,
    /// Admissible strength box for target cells (`k ≥ 1`).
    pub alpha_lo: KSeq,
    pub alpha_hi: KSeq,
    /// Current strengths (generator cells stay pinned at `F(s_k)`).
    pub alpha: KSeq,
    /// Coupling strengths at the cell junctions.
    pub beta: KSeq,
    /// `inf` of all protected levels; the operator is bounded below by
    /// `s_inf - 1` once certified.
    pub s_inf: f64,
    /// Resolvent comparison point `s_inf - 2`.
    pub mu: f64,
}

impl SynthesisState {
    /// Run the deterministic part of the construction: generator values,
    /// lengths, neighborhoods, admissible boxes, and the coupling schedule.
    pub fn build(target: SpectralTarget, n: usize, params: SynthesisParams) -> Result<Self> {
        target.validate()?;
        let m = target.disc.len() as i64;
        let tail = params.tail.unwrap_or(n);
        let neg_count = n + tail;
        let k_min = 1 - neg_count as i64;
        let k_max = m;
        if neg_count == 0 && m == 0 {
            return Err(Error::Spec("no cells to synthesize (empty truncation and targets)".into()));
        }
        let (t1, t2) = target.window;
        let interior = target.open_interior();

        // Targets per cell.
        let gen = generate_ess_sequence(&target, neg_count)?;
        let mut s = KSeq::filled(k_min, k_max, 0.0);
        for k in k_min..=0 {
            let raw = gen[(-k) as usize];
            s.set(k, settle_generator_value(raw, t1, t2, &interior)?);
        }
        for k in 1..=k_max {
            s.set(k, target.disc[(k - 1) as usize]);
        }

        // Lengths.
        let mut d = KSeq::filled(k_min, k_max, 0.0);
        for (k, sk) in s.clone().iter() {
            d.set(k, cell_length(sk, t2, &params, k));
        }

        // Neighborhoods and admissible boxes.
        let mut delta = KSeq::filled(k_min, k_max, 0.0);
        let mut alpha_lo = KSeq::filled(k_min, k_max, 0.0);
        let mut alpha_hi = KSeq::filled(k_min, k_max, 0.0);
        let mut alpha = KSeq::filled(k_min, k_max, 0.0);
        for k in k_min..=0 {
            delta.set(k, generator_ball_radius(s.get(k), t1, t2, &interior));
            let a = secular_dirichlet(d.get(k), s.get(k))?;
            alpha.set(k, a);
            alpha_lo.set(k, a);
            alpha_hi.set(k, a);
        }
        for k in 1..=k_max {
            let sk = s.get(k);
            let dk = d.get(k);
            let mut gap = num::min(sk - t1, t2 - sk);
            for j in 1..=k_max {
                if j != k {
                    gap = num::min(gap, num::abs(sk - s.get(j)));
                }
            }
            for &(a, b) in &interior {
                // Distance from the target to the closed interval [a, b].
                let dist = if sk < a {
                    a - sk
                } else if sk > b {
                    sk - b
                } else {
                    0.0
                };
                gap = num::min(gap, dist);
            }
            if !(gap > 0.0) {
                return Err(Error::Spec(format!(
                    "target {sk} has no room for a protected neighborhood"
                )));
            }
            let mut r = BALL_FACTOR * gap;
            let budget = dk / k as f64;
            let mut ok = false;
            for _ in 0..60 {
                let lo = secular_dirichlet(dk, sk - r / 2.0)?;
                let hi = secular_dirichlet(dk, sk + r / 2.0)?;
                if hi < 0.0 && hi - lo <= budget {
                    delta.set(k, r);
                    alpha_lo.set(k, lo);
                    alpha_hi.set(k, hi);
                    ok = true;
                    break;
                }
                r /= 2.0;
            }
            if !ok {
                return Err(Error::Convergence(format!(
                    "could not shrink the neighborhood of target {sk} into its strength budget"
                )));
            }
            alpha.set(k, secular_dirichlet(dk, sk)?);
        }

        // Protected-level infimum and the comparison point below it.
        let mut s_inf = f64::INFINITY;
        for (k, sk) in s.iter() {
            let lvl = if k >= 1 { sk - delta.get(k) } else { sk };
            s_inf = num::min(s_inf, lvl);
        }
        let mu = s_inf - 2.0;

        let beta = coupling_schedule(&d, params.epsilon);

        Ok(SynthesisState {
            target,
            params,
            n,
            tail,
            s,
            d,
            delta,
            alpha_lo,
            alpha_hi,
            alpha,
            beta,
            s_inf,
            mu,
        })
    }

    /// Number of coupled target cells (`min(n, m)`).
    pub fn coupled_targets(&self) -> i64 {
        (self.n as i64).min(self.s.k_max())
    }

    /// Index range `[lo, hi]` of the coupled block's cells, or `None` when
    /// nothing is coupled (`n = 0`).
    pub fn coupled_range(&self) -> Option<(i64, i64)> {
        if self.n == 0 {
            return None;
        }
        let lo = 1 - self.n as i64;
        let hi = self.coupled_targets();
        Some((lo, hi))
    }

    /// Protected ball of cell `k` (radius `δ_k`).
    pub fn ball(&self, k: i64) -> (f64, f64) {
        let s = self.s.get(k);
        let r = self.delta.get(k);
        (s - r, s + r)
    }

    /// Coupled generator cells whose target lies inside the open window.
    fn coupled_window_generators(&self) -> Vec<i64> {
        let (t1, t2) = self.target.window;
        match self.coupled_range() {
            None => Vec::new(),
            Some((lo, _)) => (lo..=0)
                .filter(|&k| {
                    let s = self.s.get(k);
                    s > t1 && s < t2
                })
                .collect(),
        }
    }

    /// The coupled block `H^n`: cells `-n+1 ..= min(n, m)` joined by δ
    /// couplings, Dirichlet outer ends, with the given strengths.
    fn coupled_block_with(&self, alpha: &KSeq) -> Result<ChainOperator> {
        let (lo, hi) = self
            .coupled_range()
            .ok_or_else(|| Error::Shape("truncation level 0 has no coupled block".into()))?;
        let cells: Vec<Cell> =
            (lo..=hi).map(|k| Cell::delta(self.d.get(k), alpha.get(k))).collect();
        let couplings: Vec<Jump> =
            (lo..hi).map(|k| Jump::Delta(self.beta.get(k))).collect();
        let origin = -(lo..=0).map(|k| self.d.get(k)).sum::<f64>();
        ChainOperator::new(cells, couplings, Boundary::Dirichlet, Boundary::Dirichlet, origin)
    }

    /// The coupled block with the current strengths.
    pub fn coupled_block(&self) -> Result<ChainOperator> {
        self.coupled_block_with(&self.alpha)
    }

    /// The coupled block with an explicit strength assignment (used to probe
    /// the admissible box without mutating the state).
    pub fn block_with_strengths(&self, alpha: &KSeq) -> Result<ChainOperator> {
        self.coupled_block_with(alpha)
    }

    /// The partly coupled operator: the coupled block plus all remaining
    /// cells behind Dirichlet walls.
    pub fn partly_coupled(&self) -> Result<ChainOperator> {
        let k_min = self.s.k_min();
        let k_max = self.s.k_max();
        let cells: Vec<Cell> =
            (k_min..=k_max).map(|k| Cell::delta(self.d.get(k), self.alpha.get(k))).collect();
        let coupled = self.coupled_range();
        let couplings: Vec<Jump> = (k_min..k_max)
            .map(|k| match coupled {
                Some((lo, hi)) if k >= lo && k < hi => Jump::Delta(self.beta.get(k)),
                _ => Jump::DirichletWall,
            })
            .collect();
        let origin = -(k_min..=0).map(|k| self.d.get(k)).sum::<f64>();
        ChainOperator::new(cells, couplings, Boundary::Dirichlet, Boundary::Dirichlet, origin)
    }

    /// Locate the unique eigenvalue of `op` inside the protected ball of
    /// cell `k`, or report how many it holds.
    fn locate_in_ball(&self, op: &ChainOperator, k: i64) -> Result<BallContent> {
        let (lo, hi) = self.ball(k);
        let n_lo = chain::count_below(op, lo)?;
        let n_hi = chain::count_below(op, hi)?;
        if n_hi - n_lo != 1 {
            return Ok(BallContent::Count(n_hi - n_lo));
        }
        let (mut a, mut b) = (lo, hi);
        while b - a > self.params.eig_tol {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if chain::count_below(op, mid)? > n_lo {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(BallContent::One(0.5 * (a + b)))
    }

    /// Certification check of the current couplings: correct window count,
    /// exactly one eigenvalue per target ball at the center and at all box
    /// corners, quarter-width corner displacement, and all remaining window
    /// eigenvalues inside the essential interior.
    fn certified(&self) -> Result<bool> {
        let Some(_) = self.coupled_range() else { return Ok(true) };
        let p = self.coupled_targets().max(0);
        let gens = self.coupled_window_generators();
        let expected = p as usize + gens.len();

        // Center configuration plus under/over corners per target.
        let mut configs: Vec<(Option<i64>, bool)> = vec![(None, false)];
        for k in 1..=p {
            configs.push((Some(k), false)); // α_k low, others high
            configs.push((Some(k), true)); // α_k high, others low
        }
        for (pivot, pivot_high) in configs {
            let mut alpha = self.alpha.clone();
            if let Some(kp) = pivot {
                for k in 1..=p {
                    let high = if k == kp { pivot_high } else { !pivot_high };
                    alpha.set(k, if high { self.alpha_hi.get(k) } else { self.alpha_lo.get(k) });
                }
            }
            let op = self.coupled_block_with(&alpha)?;
            // Finite couplings pull ground states below their decoupled
            // values; the certified configuration must stay above the
            // protected floor.
            if chain::count_below(&op, self.s_inf - 1.0)? != 0 {
                return Ok(false);
            }
            let report = chain::eigenvalues_in(&op, self.target.window, self.params.eig_tol)?;
            if report.total_multiplicity() != expected {
                return Ok(false);
            }
            for k in 1..=p {
                match self.locate_in_ball(&op, k)? {
                    BallContent::One(lam) => {
                        if let Some(kp) = pivot {
                            if k == kp {
                                // The corner strength targets s ± δ/4 past
                                // the center; the coupled eigenvalue must
                                // clear at least that much on the same side.
                                let s = self.s.get(k);
                                let q = self.delta.get(k) / 4.0;
                                if pivot_high && !(lam >= s + q) {
                                    return Ok(false);
                                }
                                if !pivot_high && !(lam <= s - q) {
                                    return Ok(false);
                                }
                            }
                        }
                    }
                    BallContent::Count(_) => return Ok(false),
                }
            }
            // Remaining window eigenvalues must sit in the essential interior.
            let interior = self.target.open_interior();
            'outer: for e in &report.eigenvalues {
                for k in 1..=p {
                    let (lo, hi) = self.ball(k);
                    if e.value > lo && e.value < hi {
                        continue 'outer;
                    }
                }
                let pad = self.params.eig_tol;
                if !interior.iter().any(|&(a, b)| e.value > a - pad && e.value < b + pad) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Multiply all couplings of the block by the escalation factor until the
    /// certification holds; returns the number of rounds used.
    pub fn escalate(&mut self) -> Result<usize> {
        let Some((lo, hi)) = self.coupled_range() else { return Ok(0) };
        for round in 0..=self.params.max_escalation_rounds {
            if self.certified()? {
                return Ok(round);
            }
            if round == self.params.max_escalation_rounds {
                break;
            }
            for k in lo..hi {
                let b = self.beta.get(k);
                self.beta.set(k, b * self.params.escalation_factor);
            }
        }
        Err(Error::Escalation(format!(
            "couplings not certified after {} rounds of factor {}",
            self.params.max_escalation_rounds, self.params.escalation_factor
        )))
    }

    /// Monotone Gauss–Seidel tuning of the coupled target strengths inside
    /// their boxes until every located eigenvalue matches its target.
    pub fn tune(&mut self) -> Result<TuneResult> {
        let p = match self.coupled_range() {
            Some(_) => self.coupled_targets().max(0),
            None => 0,
        };
        let mut sweeps = 0;
        if p > 0 {
            let tol = self.params.tune_tol;
            loop {
                if sweeps >= self.params.max_sweeps {
                    return Err(Error::Convergence(format!(
                        "strength tuning did not converge in {} sweeps",
                        self.params.max_sweeps
                    )));
                }
                sweeps += 1;
                for k in 1..=p {
                    self.tune_coordinate(k)?;
                }
                let op = self.coupled_block()?;
                let mut worst: f64 = 0.0;
                for k in 1..=p {
                    match self.locate_in_ball(&op, k)? {
                        BallContent::One(lam) => {
                            worst = num::max(worst, num::abs(lam - self.s.get(k)));
                        }
                        BallContent::Count(c) => {
                            return Err(Error::Bracket(format!(
                                "target ball {k} holds {c} eigenvalues during tuning"
                            )));
                        }
                    }
                }
                if worst <= tol {
                    break;
                }
            }
        }

        let mut achieved = Vec::new();
        if p > 0 {
            let op = self.coupled_block()?;
            for k in 1..=p {
                if let BallContent::One(lam) = self.locate_in_ball(&op, k)? {
                    achieved.push((self.s.get(k), lam));
                }
            }
        }
        let certificate = chain::eigenvalues_in(
            &self.partly_coupled()?,
            self.target.window,
            self.params.eig_tol,
        )?;
        Ok(TuneResult {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            achieved,
            sweeps,
            certificate,
        })
    }

    /// Bisection in `α_k` over its admissible box driving the located ball
    /// eigenvalue onto the target (the map is strictly increasing).
    fn tune_coordinate(&mut self, k: i64) -> Result<()> {
        let target = self.s.get(k);
        let (mut a, mut b) = (self.alpha_lo.get(k), self.alpha_hi.get(k));
        let eval = |state: &Self, alpha_k: f64| -> Result<f64> {
            let mut alpha = state.alpha.clone();
            alpha.set(k, alpha_k);
            let op = state.coupled_block_with(&alpha)?;
            match state.locate_in_ball(&op, k)? {
                BallContent::One(lam) => Ok(lam),
                BallContent::Count(c) => Err(Error::Bracket(format!(
                    "target ball {k} holds {c} eigenvalues at alpha={alpha_k}"
                ))),
            }
        };
        let f_lo = eval(self, a)?;
        let f_hi = eval(self, b)?;
        if !(f_lo <= target && target <= f_hi) {
            return Err(Error::Bracket(format!(
                "target {target} escaped the box image [{f_lo}, {f_hi}] of cell {k}"
            )));
        }
        let mut best = 0.5 * (a + b);
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let f = eval(self, mid)?;
            best = mid;
            if num::abs(f - target) <= 0.1 * self.params.tune_tol {
                break;
            }
            if f < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        self.alpha.set(k, best);
        Ok(())
    }
}

fn settle_generator_value(
    raw: f64,
    t1: f64,
    t2: f64,
    interior: &[(f64, f64)],
) -> Result<f64> {
    if raw < t1 || raw > t2 {
        return Ok(raw);
    }
    // Inside the closed window the value must sit strictly inside an
    // essential-interior component; nudge boundary values inward.
    for &(a, b) in interior {
        if raw >= a && raw <= b {
            let inset = (b - a) * INTERIOR_INSET;
            return Ok(num::min(num::max(raw, a + inset), b - inset));
        }
    }
    Err(Error::Spec(format!(
        "generator value {raw} lies in the window but outside the essential interior"
    )))
}

fn generator_ball_radius(s: f64, t1: f64, t2: f64, interior: &[(f64, f64)]) -> f64 {
    if s < t1 || s > t2 {
        let dist = if s < t1 { t1 - s } else { s - t2 };
        return GAP_FACTOR * dist;
    }
    for &(a, b) in interior {
        if s > a && s < b {
            return GAP_FACTOR * num::min(s - a, b - s);
        }
    }
    0.0
}

enum BallContent {
    One(f64),
    Count(usize),
}

/// Outcome of the tuning stage.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    /// Final strengths of all cells.
    pub alpha: KSeq,
    /// Final couplings (after escalation).
    pub beta: KSeq,
    /// `(target, located)` pairs for the coupled target cells.
    pub achieved: Vec<(f64, f64)>,
    pub sweeps: usize,
    /// Window spectrum of the full partly coupled operator.
    pub certificate: SpectrumReport,
}

/// Full pipeline: build, escalate, tune.
pub fn synthesize(
    target: SpectralTarget,
    n: usize,
    params: SynthesisParams,
) -> Result<(SynthesisState, TuneResult, usize)> {
    let mut state = SynthesisState::build(target, n, params)?;
    let rounds = state.escalate()?;
    let result = state.tune()?;
    Ok((state, result, rounds))
}

/// One tuned strength observed at one truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    pub k: i64,
    pub alpha: f64,
    pub located: f64,
}

/// Convergence probe: run the pipeline at several truncation levels and
/// record how much each tuned strength drifts between consecutive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub rows: Vec<ProbeRow>,
    /// Per target index: strength drifts between consecutive levels.
    pub drifts: Vec<(i64, Vec<f64>)>,
}

pub fn convergence_probe(
    target: &SpectralTarget,
    n_list: &[usize],
    params: &SynthesisParams,
) -> Result<ProbeResult> {
    let mut rows = Vec::new();
    let mut per_level: Vec<(usize, Vec<(i64, f64)>)> = Vec::new();
    for &n in n_list {
        let (state, result, _) = synthesize(target.clone(), n, params.clone())?;
        let p = state.coupled_targets().max(0);
        let mut alphas = Vec::new();
        for (i, k) in (1..=p).enumerate() {
            let located = result.achieved.get(i).map_or(f64::NAN, |&(_, l)| l);
            rows.push(ProbeRow { n, k, alpha: result.alpha.get(k), located });
            alphas.push((k, result.alpha.get(k)));
        }
        per_level.push((n, alphas));
    }
    let max_k = per_level.iter().flat_map(|(_, a)| a.iter().map(|&(k, _)| k)).max().unwrap_or(0);
    let mut drifts = Vec::new();
    for k in 1..=max_k {
        let mut ds = Vec::new();
        for w in per_level.windows(2) {
            let a0 = w[0].1.iter().find(|&&(kk, _)| kk == k).map(|&(_, a)| a);
            let a1 = w[1].1.iter().find(|&&(kk, _)| kk == k).map(|&(_, a)| a);
            if let (Some(a0), Some(a1)) = (a0, a1) {
                ds.push(num::abs(a1 - a0));
            }
        }
        drifts.push((k, ds));
    }
    Ok(ProbeResult { rows, drifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::first_eigenvalue_dirichlet;
    use rand::{Rng, SeedableRng};

    fn basic_target() -> SpectralTarget {
        SpectralTarget {
            ess_intervals: vec![],
            ess_points: vec![0.0],
            disc: vec![3.0, 7.0],
            window: (1.0, 10.0),
        }
    }

#[test]
    fn generator_point_template_repeats() {
        let t = SpectralTarget {
            ess_intervals: vec![],
            ess_points: vec![0.0],
            disc: vec![],
            window: (1.0, 2.0),
        };
        assert_eq!(generate_ess_sequence(&t, 5).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn generator_interval_endpoints_then_midpoint() {
        let t = SpectralTarget {
            ess_intervals: vec![(1.0, 2.0)],
            ess_points: vec![],
            disc: vec![],
            window: (3.0, 4.0),
        };
        assert_eq!(generate_ess_sequence(&t, 3).unwrap(), vec![1.0, 2.0, 1.5]);
    }

    #[test]
    fn generator_round_robin_over_components() {
        let t = SpectralTarget {
            ess_intervals: vec![(1.0, 2.0)],
            ess_points: vec![0.0],
            disc: vec![],
            window: (3.0, 4.0),
        };
        assert_eq!(
            generate_ess_sequence(&t, 5).unwrap(),
            vec![0.0, 1.0, 2.0, 0.0, 1.5]
        );
    }

    #[test]
    fn generator_covers_interval_densely() {
        let t = SpectralTarget {
            ess_intervals: vec![(1.0, 2.0)],
            ess_points: vec![0.0],
            disc: vec![],
            window: (3.0, 4.0),
        };
        let seq = generate_ess_sequence(&t, 10_000).unwrap();
        // Every value is in the template.
        for &v in &seq {
            assert!(v == 0.0 || (1.0..=2.0).contains(&v), "stray value {v}");
        }
        // Every point of a fine mesh of [1, 2] has a value within 1e-3.
        for i in 0..=1000 {
            let p = 1.0 + i as f64 / 1000.0;
            let nearest = seq
                .iter()
                .map(|&v| (v - p).abs())
                .fold(f64::MAX, f64::min);
            assert!(nearest <= 1e-3, "mesh point {p} uncovered (nearest {nearest})");
        }
        // The isolated point recurs.
        assert!(seq.iter().filter(|&&v| v == 0.0).count() > 5);
    }

    #[test]
    fn lengths_respect_window_and_cap() {
        let params = SynthesisParams::default();
        for k in -5i64..=5 {
            for s in [0.0, 3.0, 7.0, 10.0] {
                let d = cell_length(s, 10.0, &params, k);
                let ratio = 0.5f64.powi(k.unsigned_abs() as i32);
                assert!(d <= core::f64::consts::PI / 10.0f64.sqrt() * ratio + 1e-15);
                let pole = (core::f64::consts::PI / d) * (core::f64::consts::PI / d);
                assert!(pole > 10.0, "first Neumann-scale level {pole} not above window");
                assert!(pole > s);
            }
        }
        // All scales below 1 → the cap binds at k = 0.
        let d0 = cell_length(0.5, 0.8, &params, 0);
        assert_eq!(d0, 1.0);
    }

    #[test]
    fn schedule_matches_hand_computation() {
        let mut d = KSeq::filled(0, 1, 0.0);
        d.set(0, 1.0);
        d.set(1, 0.5);
        let beta = coupling_schedule(&d, 1.0);
        // D_0 = 1/2, D_1 = 1/2 → β_0 = 1/min(2⁻⁶, 2⁻²·2⁻⁴) = 64.
        assert!((beta.get(0) - 64.0).abs() < 1e-12);
    }

    #[test]
    fn schedule_rho_shrinks_along_geometric_lengths() {
        let mut d = KSeq::filled(-6, 6, 0.0);
        for k in -6i64..=6 {
            d.set(k, 0.9 * 0.5f64.powi(k.unsigned_abs() as i32));
        }
        let beta = coupling_schedule(&d, 1.0);
        let rho_near = schedule_rho(&d, &beta, 0);
        let rho_far = schedule_rho(&d, &beta, 5);
        assert!(rho_far < rho_near, "rho {rho_far} !< {rho_near}");
        assert!(rho_far < 0.05, "rho_far = {rho_far}");
    }

    #[test]
    fn neighborhood_boxes_are_valid() {
        let state =
            SynthesisState::build(basic_target(), 2, SynthesisParams::default()).unwrap();
        for k in 1..=2i64 {
            let (lo, hi) = state.ball(k);
            assert!(lo > 1.0 && hi < 10.0);
            assert!(state.alpha_hi.get(k) < 0.0);
            assert!(state.alpha_lo.get(k) < state.alpha_hi.get(k));
            assert!(
                state.alpha_hi.get(k) - state.alpha_lo.get(k) <= state.d.get(k) / k as f64 + 1e-15
            );
            // Decoupled base case: the box corners move the cell's lowest
            // eigenvalue exactly to the half-radius points, strictly inside
            // the localization ball.
            let lam_lo = first_eigenvalue_dirichlet(state.alpha_lo.get(k), state.d.get(k), 1e-12)
                .unwrap();
            let lam_hi = first_eigenvalue_dirichlet(state.alpha_hi.get(k), state.d.get(k), 1e-12)
                .unwrap();
            let s = state.s.get(k);
            let r = state.delta.get(k);
            assert!((lam_lo - (s - r / 2.0)).abs() < 1e-8, "lam_lo={lam_lo}");
            assert!((lam_hi - (s + r / 2.0)).abs() < 1e-8, "lam_hi={lam_hi}");
            assert!(lam_lo > lo && lam_hi < hi);
        }
        // Balls of distinct targets are disjoint.
        let (_, h1) = state.ball(1);
        let (l2, _) = state.ball(2);
        assert!(h1 < l2);
    }

    #[test]
    fn operator_is_bounded_below_by_protected_levels() {
        let mut state =
            SynthesisState::build(basic_target(), 2, SynthesisParams::default()).unwrap();
        assert!(state.s_inf <= 0.0);
        assert!((state.mu - (state.s_inf - 2.0)).abs() < 1e-15);
        // The floor holds once the couplings are certified (weak couplings
        // may pull ground states below it).
        state.escalate().unwrap();
        let op = state.partly_coupled().unwrap();
        assert_eq!(chain::count_below(&op, state.s_inf - 1.0).unwrap(), 0);
    }

    #[test]
    fn synthesize_single_target() {
        let target = SpectralTarget {
            ess_intervals: vec![],
            ess_points: vec![0.0],
            disc: vec![5.0],
            window: (1.0, 10.0),
        };
        let (state, result, _) = synthesize(target, 1, SynthesisParams::default()).unwrap();
        assert_eq!(result.achieved.len(), 1);
        let (want, got) = result.achieved[0];
        assert!((want - got).abs() <= 1e-8, "want {want} got {got}");
        assert!(state.alpha.get(1) >= state.alpha_lo.get(1));
        assert!(state.alpha.get(1) <= state.alpha_hi.get(1));
        // The certificate of the full operator sees exactly the target.
        assert_eq!(result.certificate.total_multiplicity(), 1);
        assert!((result.certificate.eigenvalues[0].value - 5.0).abs() < 1e-7);
    }

    #[test]
    fn synthesize_two_targets() {
        let (_, result, _) = synthesize(basic_target(), 2, SynthesisParams::default()).unwrap();
        assert_eq!(result.achieved.len(), 2);
        for (want, got) in &result.achieved {
            assert!((want - got).abs() <= 1e-8, "want {want} got {got}");
        }
        assert_eq!(result.certificate.total_multiplicity(), 2);
    }

    #[test]
    fn target_order_does_not_change_the_spectrum() {
        let mut swapped = basic_target();
        swapped.disc = vec![7.0, 3.0];
        let (_, r1, _) = synthesize(basic_target(), 2, SynthesisParams::default()).unwrap();
        let (_, r2, _) = synthesize(swapped, 2, SynthesisParams::default()).unwrap();
        let v1: Vec<f64> = r1.certificate.eigenvalues.iter().map(|e| e.value).collect();
        let v2: Vec<f64> = r2.certificate.eigenvalues.iter().map(|e| e.value).collect();
        assert_eq!(v1.len(), v2.len());
        for (a, b) in v1.iter().zip(v2.iter()) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn located_eigenvalue_monotone_in_strength() {
        let state =
            SynthesisState::build(basic_target(), 2, SynthesisParams::default()).unwrap();
        let mut state = state;
        state.escalate().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = rng.gen_range(1..=2i64);
            let (lo, hi) = (state.alpha_lo.get(k), state.alpha_hi.get(k));
            let mut a = rng.gen_range(lo..hi);
            let mut b = rng.gen_range(lo..hi);
            if a > b {
                core::mem::swap(&mut a, &mut b);
            }
            let mut alpha = state.alpha.clone();
            alpha.set(k, a);
            let op_a = state.coupled_block_with(&alpha).unwrap();
            alpha.set(k, b);
            let op_b = state.coupled_block_with(&alpha).unwrap();
            let la = match state.locate_in_ball(&op_a, k).unwrap() {
                BallContent::One(l) => l,
                _ => panic!("ball not simple"),
            };
            let lb = match state.locate_in_ball(&op_b, k).unwrap() {
                BallContent::One(l) => l,
                _ => panic!("ball not simple"),
            };
            assert!(la <= lb + 1e-10, "k={k}: f({a})={la} > f({b})={lb}");
        }
    }

    #[test]
    fn probe_reports_per_level_strengths() {
        let probe =
            convergence_probe(&basic_target(), &[1, 2], &SynthesisParams::default()).unwrap();
        assert!(probe.rows.iter().any(|r| r.n == 1 && r.k == 1));
        assert!(probe.rows.iter().any(|r| r.n == 2 && r.k == 2));
        for row in &probe.rows {
            assert!(row.alpha.is_finite());
            assert!((row.located - if row.k == 1 { 3.0 } else { 7.0 }).abs() < 1e-6);
        }
        let d1 = probe.drifts.iter().find(|(k, _)| *k == 1).unwrap();
        assert_eq!(d1.1.len(), 1);
    }

    #[test]
    fn validation_rejects_bad_targets() {
        let mut t = basic_target();
        t.ess_points = vec![5.0]; // isolated point inside the window
        assert!(matches!(t.validate(), Err(Error::Spec(_))));

        let mut t = basic_target();
        t.disc = vec![3.0, 3.0];
        assert!(matches!(t.validate(), Err(Error::Spec(_))));

        let mut t = basic_target();
        t.disc = vec![0.5]; // outside the window
        assert!(matches!(t.validate(), Err(Error::Spec(_))));

        let mut t = basic_target();
        t.ess_points = vec![];
        t.ess_intervals = vec![];
        assert!(matches!(t.validate(), Err(Error::Spec(_))));

        let t = SpectralTarget {
            ess_intervals: vec![(0.0, 2.0)],
            ess_points: vec![],
            disc: vec![1.0], // inside the windowed essential spectrum
            window: (0.5, 10.0),
        };
        assert!(matches!(t.validate(), Err(Error::Spec(_))));
    }

    #[test]
    fn interval_template_synthesis_keeps_window_inside_essential() {
        // Essential template protruding into the window; generator values in
        // the window are nudged into the open interior.
        let target = SpectralTarget {
            ess_intervals: vec![(1.0, 2.0)],
            ess_points: vec![0.0],
            disc: vec![5.0],
            window: (0.5, 10.0),
        };
        let state = SynthesisState::build(target, 1, SynthesisParams::default()).unwrap();
        for k in state.s.k_min()..=0 {
            let s = state.s.get(k);
            if s >= 0.5 && s <= 10.0 {
                assert!(s > 1.0 && s < 2.0, "generator value {s} not interior");
            }
        }
    }
}
