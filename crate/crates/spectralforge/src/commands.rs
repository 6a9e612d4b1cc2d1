//! Command implementations behind the `spectralforge` binary.
//!
//! Every command reads its input document, runs the corresponding core
//! routine, and writes its output atomically. Failures are reported as
//! [`CliError`] values carrying the process exit code:
//!
//! * `2` — unreadable or unparsable input,
//! * `3` — solver failure (domain, shape, grid, unsupported features, IO on
//!   output),
//! * `4` — inadmissible spectral target,
//! * `5` — escalation, convergence, or bracket failure,
//! * `6` — verification mismatch beyond the oracle error budget.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use spectralforge_core::chain::{count_below, eigenvalues_in, secular_value};
use spectralforge_core::synthesis::{
    convergence_probe, synthesize, SynthesisParams,
};
use spectralforge_core::{fd, Error};

use crate::formats::{
    atomic_write, to_json, OperatorDoc, ReportDoc, TargetDoc, TuneDoc, VerdictDoc,
    VerdictEntryDoc,
};

/// A command failure: exit code, stable kind tag, and a human message.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CliError {
    #[serde(skip)]
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        CliError { code: 2, kind: "parse", message: message.into() }
    }

    fn io(context: &str, path: &Path, e: std::io::Error) -> Self {
        CliError {
            code: 3,
            kind: "io",
            message: format!("{context} {}: {e}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Spec(_) => (4, "spec"),
            Error::Escalation(_) => (5, "escalation"),
            Error::Convergence(_) => (5, "convergence"),
            Error::Bracket(_) => (5, "bracket"),
            _ => (3, "solver"),
        };
        CliError { code, kind, message: e.to_string() }
    }
}

/// Output encoding for `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

fn read_doc<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::parse(format!("cannot parse {}: {e}", path.display())))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    atomic_write(path, bytes).map_err(|e| CliError::io("cannot write", path, e))
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Locate the window spectrum of an operator document and write the report.
pub fn cmd_solve(
    input: &Path,
    output: &Path,
    window: (f64, f64),
    tol: f64,
    format: OutputFormat,
) -> Result<ReportDoc, CliError> {
    let doc: OperatorDoc = read_doc(input)?;
    let op = doc.to_operator()?;
    let report = eigenvalues_in(&op, window, tol)?;
    let rd = ReportDoc::from_report(&report);
    let bytes = match format {
        OutputFormat::Json => to_json(&rd).into_bytes(),
        OutputFormat::Csv => {
            let mut s = String::from("value,bracket_lo,bracket_hi,multiplicity,residual\n");
            for e in &rd.eigenvalues {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    e.value, e.bracket[0], e.bracket[1], e.multiplicity, e.residual
                ));
            }
            s.into_bytes()
        }
    };
    write_out(output, &bytes)?;
    Ok(rd)
}

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

/// Derive the path the synthesized operator document is written to: the
/// result path with its extension replaced by `operator.json`.
pub fn operator_output_path(output: &Path) -> PathBuf {
    output.with_extension("operator.json")
}

/// Run the synthesis pipeline on a target document. Writes the tuning result
/// (with certificate) to `output` and the assembled operator next to it.
pub fn cmd_synthesize(
    input: &Path,
    output: &Path,
    n: usize,
    tol: f64,
    tail: Option<usize>,
) -> Result<TuneDoc, CliError> {
    let doc: TargetDoc = read_doc(input)?;
    let mut params = SynthesisParams::default();
    params.tune_tol = tol;
    params.eig_tol = params.eig_tol.min(tol);
    params.tail = tail;
    let (state, result, rounds) = synthesize(doc.to_target(), n, params)?;
    let tune = TuneDoc::new(&state, &result, rounds);
    let op = state.partly_coupled()?;
    write_out(output, to_json(&tune).as_bytes())?;
    write_out(
        &operator_output_path(output),
        to_json(&OperatorDoc::from_operator(&op)).as_bytes(),
    )?;
    Ok(tune)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Re-solve an operator with the finite-difference oracle and compare against
/// a previously written report. Refinement levels run in parallel. Returns
/// exit code 6 when any eigenvalue differs by more than three times the
/// oracle error estimate (or the counts disagree).
pub fn cmd_verify(
    operator: &Path,
    report: &Path,
    output: &Path,
) -> Result<VerdictDoc, CliError> {
    let op_doc: OperatorDoc = read_doc(operator)?;
    let report_doc: ReportDoc = read_doc(report)?;
    let op = op_doc.to_operator()?;
    let window = (report_doc.window[0], report_doc.window[1]);
    let reported = report_doc.flattened();

    let hs = fd::default_steps(op.total_length());
    // Ask the oracle for enough of the low spectrum to cover the window:
    // everything below the upper edge plus a safety margin.
    let below_upper = count_below(&op, window.1)?;
    let count = below_upper + 4;
    let levels: Vec<Vec<f64>> = (0..hs.len())
        .into_par_iter()
        .map(|i| fd::level_eigenvalues(&op, hs[0], 1 << i, count))
        .collect::<Result<_, _>>()?;
    let oracle = fd::oracle_from_levels(&op, &hs, &levels)?;
    let in_window: Vec<_> = oracle
        .iter()
        .filter(|e| e.value > window.0 && e.value < window.1)
        .copied()
        .collect();

    let mut entries = Vec::new();
    let mut pass = reported.len() == in_window.len();
    for (r, o) in reported.iter().zip(in_window.iter()) {
        let budget = 3.0 * o.error_estimate;
        let ok = (r - o.value).abs() <= budget;
        pass &= ok;
        entries.push(VerdictEntryDoc {
            reported: *r,
            oracle: o.value,
            error_estimate: o.error_estimate,
            budget,
            pass: ok,
        });
    }
    let verdict = VerdictDoc {
        pass,
        reported_count: reported.len(),
        oracle_count: in_window.len(),
        entries,
    };
    write_out(output, to_json(&verdict).as_bytes())?;
    if !verdict.pass {
        return Err(CliError {
            code: 6,
            kind: "mismatch",
            message: format!(
                "verification failed: {} reported vs {} oracle eigenvalues, {} within budget",
                verdict.reported_count,
                verdict.oracle_count,
                verdict.entries.iter().filter(|e| e.pass).count()
            ),
        });
    }
    Ok(verdict)
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Sample the secular value and the eigenvalue count on a uniform λ grid and
/// write plot data as CSV (`lambda,secular,count`).
pub fn cmd_sweep(
    input: &Path,
    output: &Path,
    window: (f64, f64),
    grid: usize,
) -> Result<(), CliError> {
    let doc: OperatorDoc = read_doc(input)?;
    let op = doc.to_operator()?;
    if grid < 2 {
        return Err(CliError::parse(format!("grid needs at least 2 points, got {grid}")));
    }
    if !window.0.is_finite() || !window.1.is_finite() || !(window.0 < window.1) {
        return Err(CliError::parse(format!(
            "sweep window must be finite and increasing, got ({}, {})",
            window.0, window.1
        )));
    }
    let mut s = String::from("lambda,secular,count\n");
    for i in 0..grid {
        let t = i as f64 / (grid - 1) as f64;
        let lambda = window.0 + t * (window.1 - window.0);
        let secular = secular_value(&op, lambda)?;
        let count = count_below(&op, lambda)?;
        s.push_str(&format!("{lambda},{secular},{count}\n"));
    }
    write_out(output, s.as_bytes())
}

// ---------------------------------------------------------------------------
// probe
// ---------------------------------------------------------------------------

/// Run the synthesis pipeline at several truncation levels and write one CSV
/// row per tuned strength: `n,k,alpha,drift,located`, where `drift` is the
/// change of `alpha` since the previous level (empty on the first).
pub fn cmd_probe(
    input: &Path,
    output: &Path,
    n_list: &[usize],
    tol: f64,
) -> Result<(), CliError> {
    if n_list.is_empty() {
        return Err(CliError::parse("probe needs at least one truncation level"));
    }
    let doc: TargetDoc = read_doc(input)?;
    let mut params = SynthesisParams::default();
    params.tune_tol = tol;
    params.eig_tol = params.eig_tol.min(tol);
    let probe = convergence_probe(&doc.to_target(), n_list, &params)?;
    let mut s = String::from("n,k,alpha,drift,located\n");
    let mut prev: Vec<(i64, f64)> = Vec::new();
    let mut current_n = None;
    let mut seen: Vec<(i64, f64)> = Vec::new();
    for row in &probe.rows {
        if current_n != Some(row.n) {
            if current_n.is_some() {
                prev = std::mem::take(&mut seen);
            }
            current_n = Some(row.n);
        }
        let drift = prev
            .iter()
            .find(|&&(k, _)| k == row.k)
            .map(|&(_, a)| format!("{}", (row.alpha - a).abs()))
            .unwrap_or_default();
        s.push_str(&format!("{},{},{},{},{}\n", row.n, row.k, row.alpha, drift, row.located));
        seen.push((row.k, row.alpha));
    }
    write_out(output, s.as_bytes())
}
