//! Command dispatch behind the `scl` binary.

use std::fmt;

use crate::config::ManifoldConfig;
use crate::error::{Error, Result};
use crate::geometry::{self, max_abs};
use crate::induction::{ricci_flat_params, verify_theorem, InducedSpace};
use crate::lifts::{bracket_residual, verify_conformal, verify_hamiltonian_lift};
use crate::reduction::roundtrip_report;
use crate::report::{Diagnostic, Record, VerificationReport};
use crate::sampling::{base_samples, induced_samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Validate `(M, ω, ∇)`.
    Check,
    /// Build `∇^P` and verify its identities.
    Induce,
    /// Hamiltonian and conformal lifts from the `[lifts]` sections.
    Lift,
    /// Reduce `∇^P` back to `M`.
    Reduce,
    /// Same as `reduce`.
    Roundtrip,
    /// Every applicable suite.
    All,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Check => "check",
            Command::Induce => "induce",
            Command::Lift => "lift",
            Command::Reduce => "reduce",
            Command::Roundtrip => "roundtrip",
            Command::All => "all",
        };
        f.write_str(s)
    }
}

pub fn run(command: Command, config: &ManifoldConfig) -> Result<VerificationReport> {
    let v = &config.verify;
    let mut report = VerificationReport::new(config.spec.name.clone(), v.seed);
    match command {
        Command::Check => report.extend(check(config)?),
        Command::Induce => report.extend(induce(config)?),
        Command::Lift => report.extend(lift(config)?),
        Command::Reduce | Command::Roundtrip => report.extend(roundtrip(config)?),
        Command::All => {
            report.extend(check(config)?);
            report.extend(induce(config)?);
            report.extend(roundtrip(config)?);
            if has_lifts(config) {
                report.extend(lift(config)?);
            }
        }
    }
    Ok(report)
}

fn has_lifts(config: &ManifoldConfig) -> bool {
    !config.hamiltonians.is_empty() || config.conformal.is_some()
}

fn check(config: &ManifoldConfig) -> Result<VerificationReport> {
    let (spec, v) = (&config.spec, &config.verify);
    let samples = base_samples(spec.dim(), v.samples, v.seed);
    let mut report = VerificationReport::new(spec.name.clone(), v.seed);
    let sc = spec.validate(&samples, v.tol.structure)?;
    let sym = &sc.symplectic;
    report.push(Record::new("dω", "ω = dλ is closed", sym.max_closedness, v.tol.structure));
    report.push(Record::new("ω + ωᵀ", "ω is antisymmetric", sym.max_antisymmetry, v.tol.structure));
    report.push(Record::new(
        "|det ω| floor",
        "ω is nondegenerate",
        (v.tol.structure - sym.min_abs_det).max(0.0),
        0.0,
    ));
    report.push(Record::new("torsion of ∇", "∇ is torsion-free", sc.max_torsion, v.tol.torsion));
    report.push(Record::new("∇ω", "∇ is symplectic", sc.max_nabla_omega, v.tol.nabla_mu));
    let (mut ric_asym, mut lowered) = (0.0f64, 0.0f64);
    for p in &samples {
        let r = geometry::ricci(&spec.connection, p)?;
        ric_asym = ric_asym.max(max_abs(&(&r - &r.t())));
        let curv = geometry::curvature(&spec.connection, p)?;
        let omega = spec.omega.eval(p, 0)?.values();
        let m = spec.dim();
        for l in 0..m {
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        let (mut a, mut b) = (0.0, 0.0);
                        for q in 0..m {
                            a += omega[[l, q]] * curv[[q, k, i, j]];
                            b += omega[[k, q]] * curv[[q, l, i, j]];
                        }
                        lowered = lowered.max((a - b).abs());
                    }
                }
            }
        }
    }
    report.push(Record::new("r − rᵀ", "Ricci of a symplectic connection is symmetric", ric_asym, v.tol.structure));
    report.push(Record::new(
        "ω-lowered curvature asymmetry",
        "ω(R(X,Y)Z, T) is symmetric in Z, T",
        lowered,
        v.tol.nabla_mu,
    ));
    let rt = geometry::is_ricci_type(&spec.connection, &spec.omega, &samples, v.tol.flat)?;
    report.diagnostics.push(Diagnostic::new(
        "max |W|",
        rt.max_w,
        if rt.pass { "Ricci type" } else { "not of Ricci type" },
    ));
    for d in &sym.diagnostics {
        report.diagnostics.push(Diagnostic::new("ω at sample", 0.0, d.clone()));
    }
    Ok(report)
}

fn induce(config: &ManifoldConfig) -> Result<VerificationReport> {
    let (spec, v) = (&config.spec, &config.verify);
    let samples = induced_samples(spec.dim(), v.samples, v.seed);
    verify_theorem(spec, &ricci_flat_params(spec), &samples, v.seed, &v.tol)
}

fn roundtrip(config: &ManifoldConfig) -> Result<VerificationReport> {
    let (spec, v) = (&config.spec, &config.verify);
    let samples = induced_samples(spec.dim(), v.samples, v.seed);
    roundtrip_report(spec, &ricci_flat_params(spec), &samples, v.seed, &v.tol, true)
}

fn lift(config: &ManifoldConfig) -> Result<VerificationReport> {
    if !has_lifts(config) {
        return Err(Error::MissingSection("lifts.hamiltonian.* or lifts.conformal".into()));
    }
    let (spec, v) = (&config.spec, &config.verify);
    let samples = induced_samples(spec.dim(), v.samples, v.seed);
    let space = InducedSpace::new(spec.clone());
    let mut report = VerificationReport::new(spec.name.clone(), v.seed);
    for hp in &config.hamiltonians {
        let (records, diags) = verify_hamiltonian_lift(hp, &space, &samples, v.tol.lift);
        records.into_iter().for_each(|r| report.push(r));
        report.diagnostics.extend(diags);
    }
    let hs = &config.hamiltonians;
    for (i, h1) in hs.iter().enumerate() {
        for h2 in &hs[i + 1..] {
            let res = bracket_residual(h1, h2, &space, &samples)?;
            report.push(Record::new(
                format!("[{}~, {}~] − [{}, {}]~", h1.name, h2.name, h1.name, h2.name),
                "the Hamiltonian lift is a Lie algebra homomorphism",
                res,
                v.tol.lift,
            ));
        }
    }
    if let Some(cd) = &config.conformal {
        let (records, diags) = verify_conformal(cd, &space, &samples, v.tol.lift);
        records.into_iter().for_each(|r| report.push(r));
        report.diagnostics.extend(diags);
    }
    Ok(report)
}
