//! End-to-end acceptance battery.
//!
//! Each test covers one acceptance criterion and prints a single
//! `criterion N: PASS` line when it succeeds; a failing assertion names the
//! criterion in its message.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectralforge_core::chain::{
    self, Boundary, Cell, ChainOperator, Jump, SpectrumReport,
};
use spectralforge_core::closed_forms::{
    first_eigenvalue_dirichlet, first_eigenvalue_neumann, secular_dirichlet, secular_neumann,
    EndKind, PoleLattice,
};
use spectralforge_core::fd;
use spectralforge_core::synthesis::{
    convergence_probe, synthesize, SpectralTarget, SynthesisParams, SynthesisState,
};

fn sample_alpha_d(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let alpha = rng.gen_range(-1e3..1e3);
    // Log-uniform lengths over [1e-3, 10].
    let d = 10f64.powf(rng.gen_range(-3.0..1.0));
    (alpha, d)
}

fn values(report: &SpectrumReport) -> Vec<f64> {
    let mut out = Vec::new();
    for e in &report.eigenvalues {
        for _ in 0..e.multiplicity {
            out.push(e.value);
        }
    }
    out
}

/// Criterion 1: single-cell spectra below the second pole match the closed
/// forms (Dirichlet and Neumann) within 1e-9 relative, 1000 samples, < 10 s.
#[test]
fn criterion_1_closed_form_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..1000 {
        let (alpha, d) = sample_alpha_d(&mut rng);
        for kind in [EndKind::Dirichlet, EndKind::Neumann] {
            let bc = match kind {
                EndKind::Dirichlet => Boundary::Dirichlet,
                EndKind::Neumann => Boundary::Neumann,
            };
            let lat = PoleLattice::new(kind, d).unwrap();
            let (p1, p2) = (lat.pole(1), lat.pole(2));
            let lam1 = match kind {
                EndKind::Dirichlet => first_eigenvalue_dirichlet(alpha, d, 1e-13).unwrap(),
                EndKind::Neumann => first_eigenvalue_neumann(alpha, d, 1e-13).unwrap(),
            };
            let op = ChainOperator::single_cell(Cell::delta(d, alpha), bc, 0.0).unwrap();

            // Up to just above the first pole: exactly the first-branch
            // solution and the pole eigenvalue.
            let upper = p1 * (1.0 + 1e-6);
            // Flat tight tolerance: bisection bottoms out at float resolution
            // for large eigenvalues, which is far below 1e-9 relative.
            let report =
                chain::eigenvalues_in(&op, (f64::NEG_INFINITY, upper), 1e-11).unwrap();
            let got = values(&report);
            assert_eq!(got.len(), 2, "criterion 1 trial {trial}: {kind:?} count");
            assert!(
                (got[0] - lam1).abs() <= 1e-9 * (1.0 + lam1.abs()),
                "criterion 1 trial {trial}: lambda1 {} vs {lam1}",
                got[0]
            );
            assert!(
                (got[1] - p1).abs() <= 1e-9 * p1,
                "criterion 1 trial {trial}: pole {} vs {p1}",
                got[1]
            );

            // Between the poles sits exactly one further branch solution
            // (up to the window margins); it must satisfy F = alpha.
            let report2 = chain::eigenvalues_in(
                &op,
                (p1 * (1.0 + 1e-6), p2 * (1.0 - 1e-6)),
                1e-11 * (1.0 + p2.abs().sqrt()),
            )
            .unwrap();
            let mid = values(&report2);
            assert!(mid.len() <= 1, "criterion 1 trial {trial}: branch count {}", mid.len());
            if let Some(&lam3) = mid.first() {
                let f = match kind {
                    EndKind::Dirichlet => secular_dirichlet(d, lam3).unwrap(),
                    EndKind::Neumann => secular_neumann(d, lam3).unwrap(),
                };
                assert!(
                    (f - alpha).abs() <= 1e-5 * (1.0 + alpha.abs()),
                    "criterion 1 trial {trial}: branch residual {} at {lam3}",
                    f - alpha
                );
            }
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 10.0, "criterion 1: runtime {dt:?} over budget");
    println!("criterion 1: PASS (1000 samples, {:.2} s)", dt.as_secs_f64());
}

/// Criterion 2: F(Lambda(alpha, d)) = alpha within 1e-8 over the same sample.
#[test]
fn criterion_2_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (alpha, d) = sample_alpha_d(&mut rng);
        let lam_d = first_eigenvalue_dirichlet(alpha, d, 1e-13).unwrap();
        let lam_n = first_eigenvalue_neumann(alpha, d, 1e-13).unwrap();
        let rd = (secular_dirichlet(d, lam_d).unwrap() - alpha).abs();
        let rn = (secular_neumann(d, lam_n).unwrap() - alpha).abs();
        worst = worst.max(rd).max(rn);
    }
    assert!(worst <= 1e-8, "criterion 2: worst residual {worst}");
    println!("criterion 2: PASS (worst residual {worst:.3e})");
}

/// Criterion 3: Robin eigenvalues are nondecreasing in beta and reach the
/// Dirichlet values at beta = 1e6 within 1e-4 relative.
#[test]
fn criterion_3_robin_to_dirichlet() {
    let d = 1.0;
    let mut worst = 0.0f64;
    for alpha in [-5.0, 0.0, 5.0] {
        let dirichlet =
            ChainOperator::single_cell(Cell::delta(d, alpha), Boundary::Dirichlet, 0.0).unwrap();
        let vd = values(
            &chain::eigenvalues_in(&dirichlet, (f64::NEG_INFINITY, 170.0), 1e-10).unwrap(),
        );
        assert!(vd.len() >= 4, "criterion 3: need 4 Dirichlet eigenvalues");
        let mut prev: Option<Vec<f64>> = None;
        for exp in 0..=6 {
            let beta = 10f64.powi(exp);
            let op = ChainOperator::single_cell(Cell::delta(d, alpha), Boundary::Robin(beta), 0.0)
                .unwrap();
            let v = values(&chain::eigenvalues_in(&op, (f64::NEG_INFINITY, 170.0), 1e-10).unwrap());
            assert!(v.len() >= 4, "criterion 3: need 4 Robin eigenvalues");
            if let Some(p) = &prev {
                for j in 0..4 {
                    assert!(
                        p[j] <= v[j] + 1e-9,
                        "criterion 3: alpha={alpha} j={j} not nondecreasing at beta=1e{exp}"
                    );
                }
            }
            if exp == 6 {
                for j in 0..4 {
                    let rel = (v[j] - vd[j]).abs() / (1.0 + vd[j].abs());
                    worst = worst.max(rel);
                    assert!(
                        rel < 1e-4,
                        "criterion 3: alpha={alpha} j={j} robin={} dirichlet={}",
                        v[j],
                        vd[j]
                    );
                }
            }
            prev = Some(v);
        }
    }
    println!("criterion 3: PASS (worst Dirichlet-limit deviation {worst:.3e})");
}

/// Criterion 4: the coupled-vs-walls eigenvalue gap obeys the beta^{-1/2}
/// bound: |gap|·sqrt(beta) stays bounded along beta = 1e2..1e6 (monotone
/// trend, endpoint ratio <= 1.5) for the lowest three eigenvalues.
#[test]
fn criterion_4_coupling_strength_bound() {
    let cells = vec![Cell::delta(1.0, -2.0), Cell::delta(0.8, 1.0)];
    let walls = ChainOperator::new(
        cells.clone(),
        vec![Jump::DirichletWall],
        Boundary::Dirichlet,
        Boundary::Dirichlet,
        0.0,
    )
    .unwrap();
    let vw = values(&chain::eigenvalues_in(&walls, (f64::NEG_INFINITY, 60.0), 1e-12).unwrap());
    assert!(vw.len() >= 3, "criterion 4: need 3 wall eigenvalues");

    let mut bounds: Vec<Vec<f64>> = Vec::new();
    for exp in 2..=6 {
        let beta = 10f64.powi(exp);
        let op = ChainOperator::new(
            cells.clone(),
            vec![Jump::Delta(beta)],
            Boundary::Dirichlet,
            Boundary::Dirichlet,
            0.0,
        )
        .unwrap();
        let v = values(&chain::eigenvalues_in(&op, (f64::NEG_INFINITY, 60.0), 1e-12).unwrap());
        let b: Vec<f64> = (0..3).map(|j| (v[j] - vw[j]).abs() * beta.sqrt()).collect();
        bounds.push(b);
    }
    for j in 0..3 {
        for w in bounds.windows(2) {
            assert!(
                w[1][j] <= w[0][j] * 1.1 + 1e-9,
                "criterion 4: j={j} bound not trending down: {:?} -> {:?}",
                w[0][j],
                w[1][j]
            );
        }
        let (first, last) = (bounds[0][j], bounds[bounds.len() - 1][j]);
        assert!(
            last <= 1.5 * first + 1e-9,
            "criterion 4: j={j} endpoint ratio {last} vs {first}"
        );
    }
    println!("criterion 4: PASS (scaled gaps {:?} -> {:?})", bounds[0], bounds[4]);
}

fn random_chain(rng: &mut ChaCha8Rng) -> ChainOperator {
    let n = rng.gen_range(1..=8);
    let cells: Vec<Cell> = (0..n)
        .map(|_| Cell::delta(rng.gen_range(0.5..1.2), rng.gen_range(-3.0..3.0)))
        .collect();
    let couplings: Vec<Jump> = (0..n - 1).map(|_| Jump::Delta(rng.gen_range(-2.0..4.0))).collect();
    ChainOperator::new(cells, couplings, Boundary::Dirichlet, Boundary::Dirichlet, 0.0).unwrap()
}

/// Lowest `count` eigenvalues of a chain via the window solver.
fn lowest(op: &ChainOperator, count: usize, tol: f64) -> Vec<f64> {
    let mut upper = 50.0;
    for _ in 0..20 {
        if chain::count_below(op, upper).unwrap() >= count {
            break;
        }
        upper *= 2.0;
    }
    let report = chain::eigenvalues_in(op, (f64::NEG_INFINITY, upper), tol).unwrap();
    let mut v = values(&report);
    v.truncate(count);
    v
}

/// Criterion 5: 100 random chains, lowest 6 eigenvalues agree with the
/// finite-difference oracle within 3x its own error estimate, < 60 s.
#[test]
fn criterion_5_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for trial in 0..100 {
        let op = random_chain(&mut rng);
        let exact = lowest(&op, 6, 1e-11);
        let hs = fd::default_steps(op.total_length());
        let oracle = fd::oracle_eigenvalues(&op, 6, &hs).unwrap();
        for (j, (x, o)) in exact.iter().zip(oracle.iter()).enumerate() {
            let budget = 3.0 * o.error_estimate + 1e-8;
            assert!(
                (x - o.value).abs() <= budget,
                "criterion 5 trial {trial} j={j}: |{} - {}| > {budget}",
                x,
                o.value
            );
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "criterion 5: runtime {dt:?} over budget");
    println!("criterion 5: PASS (100 chains, {:.2} s)", dt.as_secs_f64());
}

/// Criterion 6: the Prüfer count certificate at the window edges equals the
/// located multiplicity total exactly, for every solved chain.
#[test]
fn criterion_6_count_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut checked = 0;
    for _ in 0..60 {
        let op = random_chain(&mut rng);
        let lo = rng.gen_range(-30.0..0.0);
        let hi = rng.gen_range(10.0..80.0);
        let report = chain::eigenvalues_in(&op, (lo, hi), 1e-10).unwrap();
        assert_eq!(
            report.total_multiplicity(),
            report.count_at_upper - report.count_at_lower,
            "criterion 6: certificate mismatch"
        );
        checked += 1;
    }
    // Also on a decoupled many-cell operator with degenerate eigenvalues.
    let c = Cell::delta(1.0, -1.5);
    let op = ChainOperator::new(
        vec![c, c, c],
        vec![Jump::DirichletWall, Jump::DirichletWall],
        Boundary::Dirichlet,
        Boundary::Dirichlet,
        0.0,
    )
    .unwrap();
    let report = chain::eigenvalues_in(&op, (-10.0, 100.0), 1e-10).unwrap();
    assert_eq!(
        report.total_multiplicity(),
        report.count_at_upper - report.count_at_lower,
        "criterion 6: degenerate certificate mismatch"
    );
    checked += 1;
    println!("criterion 6: PASS ({checked} certificates, integer equality)");
}

/// Criterion 7: end-to-end synthesis of {3, 7} in window (1, 10) with
/// essential template {0}; certificate within 1e-8, both simple, confirmed
/// by the finite-difference oracle, < 120 s.
#[test]
fn criterion_7_end_to_end_synthesis() {
    let start = Instant::now();
    let target = SpectralTarget {
        ess_intervals: vec![],
        ess_points: vec![0.0],
        disc: vec![3.0, 7.0],
        window: (1.0, 10.0),
    };
    let params = SynthesisParams { tail: Some(4), ..SynthesisParams::default() };
    let (state, result, rounds) = synthesize(target, 2, params).unwrap();

    let cert = &result.certificate;
    assert_eq!(cert.total_multiplicity(), 2, "criterion 7: window count");
    for (e, want) in cert.eigenvalues.iter().zip([3.0, 7.0]) {
        assert_eq!(e.multiplicity, 1, "criterion 7: eigenvalue at {} not simple", e.value);
        assert!(
            (e.value - want).abs() <= 1e-8,
            "criterion 7: {} vs target {want}",
            e.value
        );
    }

    // Independent confirmation by the finite-difference oracle.
    let op = state.partly_coupled().unwrap();
    let hs = fd::default_steps(op.total_length());
    let below_window = chain::count_below(&op, 1.0).unwrap();
    let oracle = fd::oracle_eigenvalues(&op, below_window + 4, &hs).unwrap();
    let in_window: Vec<&fd::OracleEigenvalue> = oracle
        .iter()
        .filter(|o| o.value > 1.0 && o.value < 10.0)
        .collect();
    assert_eq!(in_window.len(), 2, "criterion 7: oracle window count");
    for (o, want) in in_window.iter().zip([3.0, 7.0]) {
        let budget = 3.0 * o.error_estimate + 1e-8;
        assert!(
            (o.value - want).abs() <= budget,
            "criterion 7: oracle {} vs {want} (budget {budget})",
            o.value
        );
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 120.0, "criterion 7: runtime {dt:?} over budget");
    println!(
        "criterion 7: PASS (targets {:?}, {rounds} escalation rounds, {:.2} s)",
        values(cert),
        dt.as_secs_f64()
    );
}

/// Criterion 8: decoupled truncation with 200 generator cells for
/// essSpec = {0} u [1, 2]; a 0.05-mesh of the windowed essential spectrum is
/// covered within 1e-2 and no window eigenvalue strays farther than 1e-2
/// from the template.
#[test]
fn criterion_8_essential_clustering() {
    let target = SpectralTarget {
        ess_intervals: vec![(1.0, 2.0)],
        ess_points: vec![0.0],
        disc: vec![],
        window: (0.5, 2.5),
    };
    let params = SynthesisParams {
        tail: Some(200),
        // Moderate decay keeps the smallest of the 200 cells resolvable.
        decay_ratio: 0.97,
        ..SynthesisParams::default()
    };
    let state = SynthesisState::build(target, 0, params).unwrap();
    let op = state.partly_coupled().unwrap();
    assert_eq!(op.cells().len(), 200);
    let report = chain::eigenvalues_in(&op, (0.5, 2.5), 1e-9).unwrap();
    assert_eq!(
        report.total_multiplicity(),
        report.count_at_upper - report.count_at_lower,
        "criterion 8: certificate mismatch"
    );
    let evs = values(&report);

    // Coverage: every 0.05-mesh point of [1, 2] has an eigenvalue within 1e-2.
    let mut worst_gap = 0.0f64;
    for i in 0..=20 {
        let p = 1.0 + i as f64 * 0.05;
        let nearest = evs.iter().map(|&v| (v - p).abs()).fold(f64::MAX, f64::min);
        worst_gap = worst_gap.max(nearest);
        assert!(nearest <= 1e-2, "criterion 8: mesh point {p} uncovered ({nearest})");
    }
    // Tightness: every window eigenvalue is within 1e-2 of the template.
    for &v in &evs {
        let dist = if v < 1.0 {
            1.0 - v
        } else if v > 2.0 {
            v - 2.0
        } else {
            0.0
        };
        assert!(dist <= 1e-2, "criterion 8: stray eigenvalue {v}");
    }
    println!(
        "criterion 8: PASS ({} window eigenvalues, worst mesh gap {worst_gap:.3e})",
        evs.len()
    );
}

/// Criterion 9: componentwise larger strengths never lower any window
/// eigenvalue; 200 random pairs inside the admissible boxes.
#[test]
fn criterion_9_tuning_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let cases = [
        (vec![3.0, 7.0], 2usize),
        (vec![2.0, 4.0, 6.0, 8.0], 4usize),
    ];
    let mut pairs = 0;
    for (disc, n) in cases {
        let target = SpectralTarget {
            ess_intervals: vec![],
            ess_points: vec![0.0],
            disc,
            window: (1.0, 10.0),
        };
        let mut state = SynthesisState::build(target, n, SynthesisParams::default()).unwrap();
        state.escalate().unwrap();
        let p = state.coupled_targets();
        for _ in 0..100 {
            let mut lo_alpha = state.alpha.clone();
            let mut hi_alpha = state.alpha.clone();
            for k in 1..=p {
                let (a, b) = (state.alpha_lo.get(k), state.alpha_hi.get(k));
                let x = rng.gen_range(a..b);
                let y = rng.gen_range(a..b);
                lo_alpha.set(k, x.min(y));
                hi_alpha.set(k, x.max(y));
            }
            let op_lo = state.block_with_strengths(&lo_alpha).unwrap();
            let op_hi = state.block_with_strengths(&hi_alpha).unwrap();
            let v_lo =
                values(&chain::eigenvalues_in(&op_lo, state.target.window, 1e-12).unwrap());
            let v_hi =
                values(&chain::eigenvalues_in(&op_hi, state.target.window, 1e-12).unwrap());
            assert_eq!(v_lo.len(), v_hi.len(), "criterion 9: window count changed");
            for (a, b) in v_lo.iter().zip(v_hi.iter()) {
                assert!(a <= &(b + 1e-10), "criterion 9: {a} > {b}");
            }
            pairs += 1;
        }
    }
    println!("criterion 9: PASS ({pairs} monotone pairs)");
}

/// Criterion 10: three-target convergence probe over n = 2, 4, 8; the
/// strength drift shrinks between successive refinements for k <= 2.
#[test]
fn criterion_10_convergence_probe() {
    let target = SpectralTarget {
        ess_intervals: vec![],
        ess_points: vec![0.0],
        disc: vec![3.0, 5.0, 7.0],
        window: (1.0, 10.0),
    };
    let probe = convergence_probe(&target, &[2, 4, 8], &SynthesisParams::default()).unwrap();
    for k in [1i64, 2] {
        let (_, drifts) = probe
            .drifts
            .iter()
            .find(|(kk, _)| *kk == k)
            .expect("criterion 10: missing drift row");
        assert_eq!(drifts.len(), 2, "criterion 10: k={k} drift count");
        assert!(
            drifts[1] < drifts[0],
            "criterion 10: k={k} drift did not shrink: {} -> {}",
            drifts[0],
            drifts[1]
        );
    }
    // Pinned regression fixture: tuned strengths at the finest level.
    let pinned: Vec<(i64, f64)> = probe
        .rows
        .iter()
        .filter(|r| r.n == 8)
        .map(|r| (r.k, r.alpha))
        .collect();
    println!("criterion 10 fixture: {pinned:?}");
    for (k, alpha) in &pinned {
        let want = PINNED_ALPHAS
            .iter()
            .find(|(kk, _)| kk == k)
            .map(|(_, a)| *a)
            .expect("criterion 10: missing pinned value");
        assert!(
            (alpha - want).abs() <= 1e-6,
            "criterion 10: k={k} alpha {alpha} drifted from pinned {want}"
        );
    }
    println!("criterion 10: PASS (drift shrinks, fixture matches)");
}

/// Tuned strengths of the three-target probe at n = 8, frozen from a
/// verified run as a regression fixture.
const PINNED_ALPHAS: [(i64, f64); 3] = [
    (1, -7.542053165550374),
    (2, -15.704772816081928),
    (3, -31.95270961635098),
];

