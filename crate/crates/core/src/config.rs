//! Declarative TOML configuration.
//!
//! ```toml
//! [manifold]
//! dimension = 4
//! lambda = ["x3", "x4", "0", "0"]
//!
//! [connection]
//! potential = "x1^4/24 + x1*x2*x3*x4"
//! # or: christoffel = { "1,1,2" = "x3", ... }   (Γ^k_{ij} keyed "k,i,j", 1-based)
//! # or: flat = true
//!
//! [lifts.hamiltonian.h1]
//! f = "x1"
//!
//! [lifts.conformal]
//! c = ["0", "0", "x3", "x4"]
//! b = "x5"          # x5 is the fiber coordinate t
//! a = "x5"
//!
//! [verify]
//! samples = 20
//! seed = 20170301
//! ```
//!
//! `fixture = "flat4"` or `"quartic4"` in `[manifold]` replaces `dimension`,
//! `lambda` and the `[connection]` section.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::expr::{ExprError, Expression, DEFAULT_MAX_ORDER};
use crate::fixtures;
use crate::geometry::{Chart, ConnectionField, OneFormField};
use crate::induction::ExactSymplecticSpec;
use crate::lifts::{ConformalData, HamiltonianPair};
use crate::report::Tolerances;
use crate::sampling::{DEFAULT_SAMPLES, DEFAULT_SEED};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    manifold: Option<Spanned<RawManifold>>,
    connection: Option<Spanned<RawConnection>>,
    lifts: Option<RawLifts>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    name: Option<String>,
    fixture: Option<Spanned<String>>,
    dimension: Option<Spanned<i64>>,
    lambda: Option<Spanned<Vec<Spanned<String>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnection {
    flat: Option<bool>,
    potential: Option<Spanned<String>>,
    christoffel: Option<BTreeMap<String, Spanned<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLifts {
    hamiltonian: Option<BTreeMap<String, RawHamiltonian>>,
    conformal: Option<RawConformal>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    f: Spanned<String>,
    x: Option<Spanned<Vec<Spanned<String>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConformal {
    c: Spanned<Vec<Spanned<String>>>,
    b: Option<Spanned<String>>,
    a: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    samples: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    fd_tol: Option<f64>,
    max_order: Option<usize>,
    allow_small_dim: Option<bool>,
}

/// Sampling and tolerance settings.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub samples: usize,
    pub seed: u64,
    pub tol: Tolerances,
    pub max_order: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            tol: Tolerances::default(),
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

/// A validated configuration.
#[derive(Clone)]
pub struct ManifoldConfig {
    pub spec: ExactSymplecticSpec,
    pub hamiltonians: Vec<HamiltonianPair>,
    pub conformal: Option<ConformalData>,
    pub verify: VerifySettings,
}

impl ManifoldConfig {
    /// A shipped fixture with default settings and no lifts.
    pub fn fixture(name: &str) -> Result<ManifoldConfig> {
        let spec = fixtures::by_name(name).ok_or_else(|| Error::Config(format!("unknown fixture `{name}`")))?;
        Ok(ManifoldConfig {
            spec,
            hamiltonians: Vec::new(),
            conformal: None,
            verify: VerifySettings::default(),
        })
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ManifoldConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// 1-based line and column of a byte offset.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[start..].chars().count() + 1)
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn err(&self, span: Range<usize>, msg: impl Into<String>) -> Error {
        let (line, column) = line_col(self.text, span.start);
        Error::ConfigSyntax {
            line,
            column,
            msg: msg.into(),
        }
    }

    /// Parse a string value; expression errors point inside the string.
    fn expr(&self, s: &Spanned<String>, dim: usize, max_order: usize) -> Result<Expression> {
        match Expression::parse(s.get_ref(), dim) {
            Ok(e) => Ok(e.with_max_order(max_order)),
            Err(e) => {
                let pos = match &e {
                    ExprError::Syntax { pos, .. }
                    | ExprError::UnknownIdentifier { pos, .. }
                    | ExprError::VariableOutOfRange { pos, .. } => *pos,
                    _ => 0,
                };
                // skip the opening quote when the value is a plain string
                let quote = usize::from(self.text[s.span()].starts_with(['"', '\'']));
                let start = s.span().start + quote + pos;
                Err(self.err(start..start, e.to_string()))
            }
        }
    }

    fn exprs(&self, v: &[Spanned<String>], dim: usize, max_order: usize) -> Result<Vec<Expression>> {
        v.iter().map(|s| self.expr(s, dim, max_order)).collect()
    }
}

pub fn parse_config(text: &str) -> Result<ManifoldConfig> {
    let src = Source { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        src.err(span, e.message().trim())
    })?;

    let mut verify = VerifySettings::default();
    let mut allow_small = false;
    if let Some(v) = &raw.verify {
        verify.samples = v.samples.unwrap_or(verify.samples);
        verify.seed = v.seed.unwrap_or(verify.seed);
        verify.max_order = v.max_order.unwrap_or(verify.max_order);
        let fd = v.fd_tol.unwrap_or(verify.tol.fd_rel);
        verify.tol = match v.tol {
            Some(t) => Tolerances::uniform(t, fd),
            None => Tolerances {
                fd_rel: fd,
                ..Tolerances::default()
            },
        };
        allow_small = v.allow_small_dim.unwrap_or(false);
        if verify.samples == 0 {
            return Err(Error::Config("[verify] samples must be positive".into()));
        }
    }

    let manifold = raw.manifold.ok_or_else(|| Error::MissingSection("manifold".into()))?;
    let mspan = manifold.span();
    let manifold = manifold.into_inner();
    let spec = if let Some(fx) = &manifold.fixture {
        if manifold.dimension.is_some() || manifold.lambda.is_some() {
            return Err(src.err(fx.span(), "`fixture` excludes `dimension` and `lambda`"));
        }
        if let Some(c) = &raw.connection {
            return Err(src.err(c.span(), "a fixture brings its own connection"));
        }
        fixtures::by_name(fx.get_ref())
            .ok_or_else(|| src.err(fx.span(), format!("unknown fixture `{}`", fx.get_ref())))?
    } else {
        let dim = manifold
            .dimension
            .as_ref()
            .ok_or_else(|| src.err(mspan.clone(), "[manifold] needs `fixture` or `dimension`"))?;
        let d = usize::try_from(*dim.get_ref()).map_err(|_| src.err(dim.span(), "dimension must be positive"))?;
        let chart = Chart::with_options(d, allow_small).map_err(|e| src.err(dim.span(), e.to_string()))?;
        let lambda = manifold
            .lambda
            .as_ref()
            .ok_or_else(|| src.err(mspan.clone(), "[manifold] needs `lambda`"))?;
        if lambda.get_ref().len() != d {
            return Err(src.err(lambda.span(), format!("lambda needs {d} components")));
        }
        let lambda = OneFormField::new(&chart, src.exprs(lambda.get_ref(), d, verify.max_order)?)?;
        let conn = raw.connection.ok_or_else(|| Error::MissingSection("connection".into()))?;
        let cspan = conn.span();
        let connection = connection_from(&src, &chart, &lambda, conn.into_inner(), cspan, verify.max_order)?;
        let name = manifold.name.clone().unwrap_or_else(|| "custom".into());
        ExactSymplecticSpec::new(name, chart, lambda, connection)
    };

    let m = spec.dim();
    let mut hamiltonians = Vec::new();
    let mut conformal = None;
    if let Some(lifts) = raw.lifts {
        for (name, h) in lifts.hamiltonian.unwrap_or_default() {
            let f = src.expr(&h.f, m, verify.max_order)?;
            let hp = match &h.x {
                Some(x) => {
                    if x.get_ref().len() != m {
                        return Err(src.err(x.span(), format!("x needs {m} components")));
                    }
                    HamiltonianPair::new(name, src.exprs(x.get_ref(), m, verify.max_order)?, f)?
                }
                None => HamiltonianPair::from_hamiltonian(name, spec.omega.inverse_field().into_ref(), f),
            };
            hamiltonians.push(hp);
        }
        if let Some(c) = lifts.conformal {
            if c.c.get_ref().len() != m {
                return Err(src.err(c.c.span(), format!("c needs {m} components")));
            }
            let cv = src.exprs(c.c.get_ref(), m, verify.max_order)?;
            let b = c.b.as_ref().map(|b| src.expr(b, m + 1, verify.max_order)).transpose()?;
            let a = c.a.as_ref().map(|a| src.expr(a, m + 1, verify.max_order)).transpose()?;
            conformal = Some(ConformalData::new(cv, b, a)?);
        }
    }

    Ok(ManifoldConfig {
        spec,
        hamiltonians,
        conformal,
        verify,
    })
}

/// Fixed probe points for comparing duplicate Christoffel entries.
fn probes(d: usize) -> Vec<Vec<f64>> {
    (0..4)
        .map(|k| (0..d).map(|i| ((k * d + i) as f64 * 0.7548776662).sin()).collect())
        .collect()
}

fn connection_from(
    src: &Source,
    chart: &Chart,
    lambda: &OneFormField,
    raw: RawConnection,
    span: Range<usize>,
    max_order: usize,
) -> Result<ConnectionField> {
    let d = chart.dim();
    let modes = usize::from(raw.flat == Some(true)) + usize::from(raw.potential.is_some()) + usize::from(raw.christoffel.is_some());
    if modes == 0 {
        return Err(src.err(span, "missing Γ: give `flat = true`, `potential` or `christoffel`"));
    }
    if modes > 1 {
        return Err(src.err(span, "give exactly one of `flat`, `potential`, `christoffel`"));
    }
    if raw.flat == Some(true) {
        return Ok(ConnectionField::flat(chart));
    }
    if let Some(p) = &raw.potential {
        let phi = src.expr(p, d, max_order)?;
        return Ok(ConnectionField::from_potential(phi, &lambda.exterior_derivative()));
    }
    let table = raw.christoffel.unwrap_or_default();
    let mut entries: BTreeMap<(usize, usize, usize), (Expression, Range<usize>)> = BTreeMap::new();
    let pts = probes(d);
    for (key, value) in &table {
        let idx: Vec<usize> = key
            .split(',')
            .map(|s| s.trim().parse::<usize>().ok().filter(|&v| (1..=d).contains(&v)))
            .collect::<Option<Vec<_>>>()
            .filter(|v| v.len() == 3)
            .ok_or_else(|| src.err(value.span(), format!("Christoffel key `{key}` must be \"k,i,j\" with indices in 1..={d}")))?;
        let (k, i, j) = (idx[0] - 1, idx[1].min(idx[2]) - 1, idx[1].max(idx[2]) - 1);
        let e = src.expr(value, d, max_order)?;
        if let Some((prev, _)) = entries.get(&(k, i, j)) {
            for p in &pts {
                let (a, b) = (prev.eval_scalar(p)?, e.eval_scalar(p)?);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(src.err(
                        value.span(),
                        format!("Christoffel entries for ({},{},{}) and ({},{},{}) differ; Γ must be symmetric", k + 1, i + 1, j + 1, k + 1, j + 1, i + 1),
                    ));
                }
            }
            continue;
        }
        entries.insert((k, i, j), (e, value.span()));
    }
    let list = entries.into_iter().map(|((k, i, j), (e, _))| (k, i, j, e)).collect();
    ConnectionField::from_symmetric(chart, list)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_of(text: &str) -> Error {
        match parse_config(text) {
            Ok(_) => panic!("expected an error"),
            Err(e) => e,
        }
    }

    #[test]
    fn fixture_shortcut() {
        let c = parse_config("[manifold]\nfixture = \"quartic4\"\n").unwrap();
        assert_eq!(c.spec.name, fixtures::QUARTIC4);
        assert_eq!(c.verify, VerifySettings::default());
    }

    #[test]
    fn odd_dimension_is_rejected() {
        let e = err_of("[manifold]\ndimension = 3\nlambda = [\"0\", \"0\", \"0\"]\n[connection]\nflat = true\n");
        match e {
            Error::ConfigSyntax { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("even"), "{msg}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn missing_connection() {
        let e = err_of("[manifold]\ndimension = 4\nlambda = [\"x3\", \"x4\", \"0\", \"0\"]\n");
        assert!(matches!(e, Error::MissingSection(ref s) if s == "connection"));
        let e = err_of("[manifold]\ndimension = 4\nlambda = [\"x3\", \"x4\", \"0\", \"0\"]\n[connection]\n");
        assert!(e.to_string().contains("missing Γ"), "{e}");
    }

    #[test]
    fn asymmetric_duplicates_are_rejected() {
        let base = "[manifold]\ndimension = 4\nlambda = [\"x3\", \"x4\", \"0\", \"0\"]\n[connection.christoffel]\n";
        let e = err_of(&format!("{base}\"1,1,2\" = \"x1\"\n\"1,2,1\" = \"x2\"\n"));
        match e {
            Error::ConfigSyntax { line, msg, .. } => {
                assert_eq!(line, 6);
                assert!(msg.contains("symmetric"));
            }
            other => panic!("{other}"),
        }
        parse_config(&format!("{base}\"1,1,2\" = \"x1\"\n\"1,2,1\" = \"1*x1\"\n")).unwrap();
    }

    #[test]
    fn toml_errors_are_positioned() {
        match err_of("[manifold]\nfixture = \"flat4\"\n[verify]\nsamples = \n") {
            Error::ConfigSyntax { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn expression_errors_point_into_the_string() {
        let text = "[manifold]\ndimension = 4\nlambda = [\"x3\", \"x4 + y\", \"0\", \"0\"]\n[connection]\nflat = true\n";
        match err_of(text) {
            Error::ConfigSyntax { line, column, msg } => {
                assert_eq!((line, column), (3, 23), "{msg}");
                assert!(msg.contains('y'));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn potential_config_matches_fixture() {
        let text = format!(
            "[manifold]\ndimension = 4\nlambda = [\"x3\", \"x4\", \"0\", \"0\"]\n[connection]\npotential = \"{}\"\n",
            fixtures::QUARTIC_POTENTIAL
        );
        let c = parse_config(&text).unwrap();
        let q = fixtures::quartic4();
        let p = [0.3, -0.4, 0.2, 0.9];
        let a = c.spec.connection.eval(&p, 1).unwrap().values();
        let b = q.connection.eval(&p, 1).unwrap().values();
        assert_eq!(a, b);
    }

    #[test]
    fn lifts_and_verify_sections() {
        let text = "[manifold]\nfixture = \"flat4\"\n\
                    [lifts.hamiltonian.h1]\nf = \"x1\"\n\
                    [lifts.hamiltonian.h2]\nf = \"x1*x2\"\nx = [\"0\", \"0\", \"x2\", \"x1\"]\n\
                    [lifts.conformal]\nc = [\"0\", \"0\", \"x3\", \"x4\"]\nb = \"x5\"\n\
                    [verify]\nsamples = 3\nseed = 9\ntol = 1e-7\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.hamiltonians.len(), 2);
        assert!(c.conformal.as_ref().unwrap().a.is_none());
        assert_eq!((c.verify.samples, c.verify.seed), (3, 9));
        assert_eq!(c.verify.tol.ricci, 1e-7);
        assert_eq!(c.verify.tol.fd_rel, Tolerances::default().fd_rel);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(err_of("[manifold]\nfixture = \"flat4\"\nfoo = 1\n"), Error::ConfigSyntax { line: 3, .. }));
    }
}
