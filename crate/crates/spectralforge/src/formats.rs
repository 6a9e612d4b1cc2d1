//! Serialized forms of the core types.
//!
//! Operators travel as JSON documents of the shape
//! `{cells: [{d, jump: {kind, strength}}], couplings: […], leftBC, rightBC,
//! origin}`; targets as `{ess: {intervals, points}, disc, window}`. All
//! writes are atomic (temp file + rename) and byte-deterministic.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spectralforge_core::chain::{
    Boundary, Cell, ChainOperator, Eigenvalue, Jump, SpectrumReport,
};
use spectralforge_core::synthesis::{SpectralTarget, SynthesisState, TuneResult};
use spectralforge_core::Error;

// ---------------------------------------------------------------------------
// Operator documents
// ---------------------------------------------------------------------------

/// A point interaction or wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum JumpDoc {
    Delta { strength: f64 },
    DeltaPrime { strength: f64 },
    DirichletWall,
    NeumannWall,
}

impl From<Jump> for JumpDoc {
    fn from(j: Jump) -> Self {
        match j {
            Jump::Delta(g) => JumpDoc::Delta { strength: g },
            Jump::DeltaPrime(g) => JumpDoc::DeltaPrime { strength: g },
            Jump::DirichletWall => JumpDoc::DirichletWall,
            Jump::NeumannWall => JumpDoc::NeumannWall,
        }
    }
}

impl From<JumpDoc> for Jump {
    fn from(j: JumpDoc) -> Self {
        match j {
            JumpDoc::Delta { strength } => Jump::Delta(strength),
            JumpDoc::DeltaPrime { strength } => Jump::DeltaPrime(strength),
            JumpDoc::DirichletWall => Jump::DirichletWall,
            JumpDoc::NeumannWall => Jump::NeumannWall,
        }
    }
}

/// An outer boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum BoundaryDoc {
    Dirichlet,
    Neumann,
    Robin { beta: f64 },
}

impl From<Boundary> for BoundaryDoc {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Dirichlet => BoundaryDoc::Dirichlet,
            Boundary::Neumann => BoundaryDoc::Neumann,
            Boundary::Robin(beta) => BoundaryDoc::Robin { beta },
        }
    }
}

impl From<BoundaryDoc> for Boundary {
    fn from(b: BoundaryDoc) -> Self {
        match b {
            BoundaryDoc::Dirichlet => Boundary::Dirichlet,
            BoundaryDoc::Neumann => Boundary::Neumann,
            BoundaryDoc::Robin { beta } => Boundary::Robin(beta),
        }
    }
}

/// One cell: interval length `d` and the jump at its midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDoc {
    pub d: f64,
    pub jump: JumpDoc,
}

/// Serialized chain operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    pub cells: Vec<CellDoc>,
    #[serde(default)]
    pub couplings: Vec<JumpDoc>,
    #[serde(rename = "leftBC")]
    pub left_bc: BoundaryDoc,
    #[serde(rename = "rightBC")]
    pub right_bc: BoundaryDoc,
    #[serde(default)]
    pub origin: f64,
}

impl OperatorDoc {
    /// Validate and assemble the operator.
    pub fn to_operator(&self) -> Result<ChainOperator, Error> {
        let cells = self
            .cells
            .iter()
            .map(|c| Cell { length: c.d, jump: c.jump.into() })
            .collect();
        let couplings = self.couplings.iter().map(|&j| j.into()).collect();
        ChainOperator::new(cells, couplings, self.left_bc.into(), self.right_bc.into(), self.origin)
    }

    pub fn from_operator(op: &ChainOperator) -> Self {
        OperatorDoc {
            cells: op
                .cells()
                .iter()
                .map(|c| CellDoc { d: c.length, jump: c.jump.into() })
                .collect(),
            couplings: op.couplings().iter().map(|&j| j.into()).collect(),
            left_bc: op.left_bc().into(),
            right_bc: op.right_bc().into(),
            origin: op.origin(),
        }
    }
}

// ---------------------------------------------------------------------------
// Target documents
// ---------------------------------------------------------------------------

/// Essential-spectrum template: closed intervals and isolated points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssDoc {
    #[serde(default)]
    pub intervals: Vec<[f64; 2]>,
    #[serde(default)]
    pub points: Vec<f64>,
}

/// Serialized spectral target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDoc {
    pub ess: EssDoc,
    #[serde(default)]
    pub disc: Vec<f64>,
    /// Open window `(T₁, T₂)`.
    pub window: [f64; 2],
}

impl TargetDoc {
    pub fn to_target(&self) -> SpectralTarget {
        SpectralTarget {
            ess_intervals: self.ess.intervals.iter().map(|&[a, b]| (a, b)).collect(),
            ess_points: self.ess.points.clone(),
            disc: self.disc.clone(),
            window: (self.window[0], self.window[1]),
        }
    }

    pub fn from_target(t: &SpectralTarget) -> Self {
        TargetDoc {
            ess: EssDoc {
                intervals: t.ess_intervals.iter().map(|&(a, b)| [a, b]).collect(),
                points: t.ess_points.clone(),
            },
            disc: t.disc.clone(),
            window: [t.window.0, t.window.1],
        }
    }
}

// ---------------------------------------------------------------------------
// Spectrum reports
// ---------------------------------------------------------------------------

/// One located eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EigenvalueDoc {
    pub value: f64,
    pub bracket: [f64; 2],
    pub multiplicity: usize,
    pub residual: f64,
}

/// Windowed spectrum with its integer count certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ReportDoc {
    pub window: [f64; 2],
    pub eigenvalues: Vec<EigenvalueDoc>,
    pub count_at_lower: usize,
    pub count_at_upper: usize,
}

impl ReportDoc {
    pub fn from_report(r: &SpectrumReport) -> Self {
        ReportDoc {
            window: [r.window.0, r.window.1],
            eigenvalues: r
                .eigenvalues
                .iter()
                .map(|e| EigenvalueDoc {
                    value: e.value,
                    bracket: [e.bracket.0, e.bracket.1],
                    multiplicity: e.multiplicity,
                    residual: e.residual,
                })
                .collect(),
            count_at_lower: r.count_at_lower,
            count_at_upper: r.count_at_upper,
        }
    }

    pub fn to_report(&self) -> SpectrumReport {
        SpectrumReport {
            window: (self.window[0], self.window[1]),
            eigenvalues: self
                .eigenvalues
                .iter()
                .map(|e| Eigenvalue {
                    value: e.value,
                    bracket: (e.bracket[0], e.bracket[1]),
                    multiplicity: e.multiplicity,
                    residual: e.residual,
                })
                .collect(),
            count_at_lower: self.count_at_lower,
            count_at_upper: self.count_at_upper,
        }
    }

    /// Eigenvalues with multiplicities expanded, sorted ascending.
    pub fn flattened(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in &self.eigenvalues {
            for _ in 0..e.multiplicity {
                out.push(e.value);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

// ---------------------------------------------------------------------------
// Tuning results
// ---------------------------------------------------------------------------

/// One entry of a cell-indexed sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexedValueDoc {
    pub k: i64,
    pub value: f64,
}

/// A `(target, located)` pair for one tuned discrete eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AchievedDoc {
    pub target: f64,
    pub located: f64,
}

/// Full result of a synthesis run: tuned strengths, couplings, and the
/// window-spectrum certificate of the assembled operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TuneDoc {
    /// Truncation level.
    pub n: usize,
    /// Extra decoupled generator cells beyond the coupled block.
    pub tail: usize,
    pub alpha: Vec<IndexedValueDoc>,
    pub beta: Vec<IndexedValueDoc>,
    pub achieved: Vec<AchievedDoc>,
    pub sweeps: usize,
    pub escalation_rounds: usize,
    pub s_inf: f64,
    pub mu: f64,
    pub certificate: ReportDoc,
}

impl TuneDoc {
    pub fn new(state: &SynthesisState, result: &TuneResult, rounds: usize) -> Self {
        TuneDoc {
            n: state.n,
            tail: state.tail,
            alpha: result
                .alpha
                .iter()
                .map(|(k, value)| IndexedValueDoc { k, value })
                .collect(),
            beta: result
                .beta
                .iter()
                .map(|(k, value)| IndexedValueDoc { k, value })
                .collect(),
            achieved: result
                .achieved
                .iter()
                .map(|&(target, located)| AchievedDoc { target, located })
                .collect(),
            sweeps: result.sweeps,
            escalation_rounds: rounds,
            s_inf: state.s_inf,
            mu: state.mu,
            certificate: ReportDoc::from_report(&result.certificate),
        }
    }
}

// ---------------------------------------------------------------------------
// Verification verdicts
// ---------------------------------------------------------------------------

/// Comparison of one reported eigenvalue against the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VerdictEntryDoc {
    pub reported: f64,
    pub oracle: f64,
    pub error_estimate: f64,
    /// Allowed discrepancy: three times the oracle error estimate.
    pub budget: f64,
    pub pass: bool,
}

/// Per-eigenvalue verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VerdictDoc {
    pub pass: bool,
    /// Eigenvalue counts inside the window: reported vs oracle.
    pub reported_count: usize,
    pub oracle_count: usize,
    pub entries: Vec<VerdictEntryDoc>,
}

// ---------------------------------------------------------------------------
// IO helpers
// ---------------------------------------------------------------------------

/// Pretty-printed JSON plus a trailing newline; output is byte-deterministic
/// for identical inputs.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    s.push('\n');
    s
}

/// Write `bytes` to `path` atomically: write a sibling temp file, flush, then
/// rename over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp_name = format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => tmp_name.clone().into(),
    };
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spectralforge_core::chain::eigenvalues_in;

    fn sample_doc() -> OperatorDoc {
        serde_json::from_str(
            r#"{
                "cells": [
                    {"d": 1.0, "jump": {"kind": "delta", "strength": -2.0}},
                    {"d": 0.75, "jump": {"kind": "deltaPrime", "strength": 0.5}}
                ],
                "couplings": [{"kind": "delta", "strength": 3.0}],
                "leftBC": {"kind": "dirichlet"},
                "rightBC": {"kind": "robin", "beta": 1.5},
                "origin": -0.25
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn operator_round_trip_is_idempotent() {
        let doc = sample_doc();
        let op = doc.to_operator().unwrap();
        let doc2 = OperatorDoc::from_operator(&op);
        assert_eq!(doc, doc2);
        let json1 = to_json(&doc2);
        let op2 = doc2.to_operator().unwrap();
        let json2 = to_json(&OperatorDoc::from_operator(&op2));
        assert_eq!(json1, json2);
    }

    #[test]
    fn wall_coupling_and_bcs_survive_round_trip() {
        let doc: OperatorDoc = serde_json::from_str(
            r#"{
                "cells": [
                    {"d": 1.0, "jump": {"kind": "delta", "strength": 0.0}},
                    {"d": 1.0, "jump": {"kind": "delta", "strength": 1.0}}
                ],
                "couplings": [{"kind": "dirichletWall"}],
                "leftBC": {"kind": "neumann"},
                "rightBC": {"kind": "dirichlet"},
                "origin": 0.0
            }"#,
        )
        .unwrap();
        let op = doc.to_operator().unwrap();
        assert_eq!(OperatorDoc::from_operator(&op), doc);
    }

    #[test]
    fn malformed_operator_is_rejected() {
        let doc: OperatorDoc = serde_json::from_str(
            r#"{
                "cells": [{"d": -1.0, "jump": {"kind": "delta", "strength": 0.0}}],
                "couplings": [],
                "leftBC": {"kind": "dirichlet"},
                "rightBC": {"kind": "dirichlet"},
                "origin": 0.0
            }"#,
        )
        .unwrap();
        assert!(doc.to_operator().is_err());
        assert!(serde_json::from_str::<OperatorDoc>(r#"{"cells": []}"#).is_err());
        assert!(serde_json::from_str::<JumpDoc>(r#"{"kind": "delta"}"#).is_err());
    }

    #[test]
    fn report_round_trip() {
        let doc: OperatorDoc = serde_json::from_str(
            r#"{
                "cells": [{"d": 1.0, "jump": {"kind": "delta", "strength": 5.0}}],
                "couplings": [],
                "leftBC": {"kind": "dirichlet"},
                "rightBC": {"kind": "dirichlet"},
                "origin": 0.0
            }"#,
        )
        .unwrap();
        let op = doc.to_operator().unwrap();
        let report = eigenvalues_in(&op, (f64::NEG_INFINITY, 50.0), 1e-10).unwrap();
        let rd = ReportDoc::from_report(&report);
        assert_eq!(rd.to_report(), report);
        assert_eq!(rd.flattened().len(), report.total_multiplicity());
        let parsed: ReportDoc = serde_json::from_str(&to_json(&rd)).unwrap();
        assert_eq!(parsed, rd);
    }

    #[test]
    fn target_round_trip() {
        let doc: TargetDoc = serde_json::from_str(
            r#"{
                "ess": {"intervals": [[1.0, 2.0]], "points": [0.0]},
                "disc": [3.0, 7.0],
                "window": [0.5, 10.0]
            }"#,
        )
        .unwrap();
        let target = doc.to_target();
        target.validate().unwrap();
        assert_eq!(TargetDoc::from_target(&target), doc);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("sf-fmt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.json");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
