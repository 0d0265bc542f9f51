//! Verification reports: per-identity residual records and their aggregation.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum residual of one identity over the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub identity: String,
    pub anchor: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Record {
    pub fn new(identity: impl Into<String>, anchor: impl Into<String>, residual: f64, tol: f64) -> Record {
        Record {
            identity: identity.into(),
            anchor: anchor.into(),
            residual,
            tol,
            pass: residual <= tol,
        }
    }
}

/// Informational value that does not affect the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    pub note: String,
}

impl Diagnostic {
    pub fn new(name: impl Into<String>, value: f64, note: impl Into<String>) -> Diagnostic {
        Diagnostic {
            name: name.into(),
            value,
            note: note.into(),
        }
    }
}

/// A documented scale factor between compared objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry {
    pub quantity: String,
    pub factor: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub overall: bool,
    pub seed: u64,
    pub fixture: String,
    pub records: Vec<Record>,
    pub scale_ledger: Vec<ScaleEntry>,
    pub diagnostics: Vec<Diagnostic>,
}

impl VerificationReport {
    pub fn new(fixture: impl Into<String>, seed: u64) -> VerificationReport {
        VerificationReport {
            overall: true,
            seed,
            fixture: fixture.into(),
            records: Vec::new(),
            scale_ledger: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn push(&mut self, record: Record) {
        self.overall &= record.pass;
        self.records.push(record);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for r in other.records {
            self.push(r);
        }
        self.scale_ledger.extend(other.scale_ledger);
        self.diagnostics.extend(other.diagnostics);
    }

    pub fn record(&self, identity: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.identity == identity)
    }

    /// Stable-key-ordered JSON.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    pub fn from_json(s: &str) -> Result<VerificationReport> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("report json: {e}")))
    }

    /// One line per record, then ledger and diagnostics.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "fixture {}  seed {}  overall {}", self.fixture, self.seed, verdict(self.overall));
        let width = self.records.iter().map(|r| r.identity.len()).max().unwrap_or(0);
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}  {:<width$}  residual {:.3e}  tol {:.0e}  [{}]",
                verdict(r.pass),
                r.identity,
                r.residual,
                r.tol,
                r.anchor
            );
        }
        for s in &self.scale_ledger {
            let _ = writeln!(out, "scale  {} = {}  ({})", s.quantity, s.factor, s.note);
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "note  {} = {:.3e}  ({})", d.name, d.value, d.note);
        }
        out
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

pub fn emit_report(report: &VerificationReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => report.to_json().into_bytes(),
        Format::Text => report.to_text().into_bytes(),
    }
}

/// Identity name, anchor and tolerance of one residual column.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub identity: String,
    pub anchor: String,
    pub tol: f64,
}

impl Check {
    pub fn new(identity: impl Into<String>, anchor: impl Into<String>, tol: f64) -> Check {
        Check {
            identity: identity.into(),
            anchor: anchor.into(),
            tol,
        }
    }
}

/// Evaluate `f` at every sample in parallel and fold each residual column
/// with `max`. A failing sample yields a failed `sample evaluation` record
/// and a diagnostic naming the point.
pub fn sweep<F>(checks: &[Check], samples: &[Vec<f64>], f: F) -> (Vec<Record>, Vec<Diagnostic>)
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let results: Vec<Result<Vec<f64>>> = samples.par_iter().map(|p| f(p)).collect();
    let mut max = vec![0.0f64; checks.len()];
    let mut diagnostics = Vec::new();
    let mut failed = 0usize;
    for (p, r) in samples.iter().zip(results) {
        match r {
            Ok(v) => {
                assert_eq!(v.len(), checks.len(), "residual column count");
                for (m, x) in max.iter_mut().zip(v) {
                    *m = if x.is_nan() { f64::NAN } else { m.max(x) };
                }
            }
            Err(e) => {
                failed += 1;
                diagnostics.push(Diagnostic::new("sample aborted", f64::NAN, format!("{e} at {p:?}")));
            }
        }
    }
    let mut records: Vec<Record> = checks
        .iter()
        .zip(max)
        .map(|(c, m)| Record::new(c.identity.clone(), c.anchor.clone(), m, c.tol))
        .collect();
    if failed > 0 {
        let mut r = Record::new("sample evaluation", "every sample point evaluates", failed as f64, 0.0);
        r.pass = false;
        records.push(r);
    }
    (records, diagnostics)
}

/// Per-identity tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub structure: f64,
    pub torsion: f64,
    pub nabla_mu: f64,
    pub ricci: f64,
    pub flat: f64,
    pub lie_connection: f64,
    pub lie_mu: f64,
    pub oracle: f64,
    pub linearity: f64,
    pub lift: f64,
    pub roundtrip: f64,
    pub omega_red: f64,
    pub s0: f64,
    pub fd_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances {
            structure: 1e-10,
            torsion: 1e-10,
            nabla_mu: 1e-9,
            ricci: 1e-8,
            flat: 1e-9,
            lie_connection: 1e-9,
            lie_mu: 1e-10,
            oracle: 1e-8,
            linearity: 1e-9,
            lift: 1e-9,
            roundtrip: 1e-9,
            omega_red: 1e-10,
            s0: 1e-12,
            fd_rel: 1e-5,
        }
    }
}

impl Tolerances {
    /// Every jet-exact identity uses `tol`; the finite-difference tolerance is kept.
    pub fn uniform(tol: f64, fd_rel: f64) -> Tolerances {
        Tolerances {
            structure: tol,
            torsion: tol,
            nabla_mu: tol,
            ricci: tol,
            flat: tol,
            lie_connection: tol,
            lie_mu: tol,
            oracle: tol,
            linearity: tol,
            lift: tol,
            roundtrip: tol,
            omega_red: tol,
            s0: tol,
            fd_rel,
        }
    }
}

/// Max-norm of a residual iterator.
pub fn sup(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}
