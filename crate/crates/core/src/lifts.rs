//! Hamiltonian and conformal vector fields on `M` lifted to `P`.
//!
//! With `i(X)ω = df_X` the Hamiltonian lift is
//! `X̃ = X^i (∂_i − λ_i ∂_t) − f_X ∂_t` and satisfies `i(X̃)μ = d(e^{2s} f_X)`.
//! For a conformal field `L_C ω = ω` both lifts use the 1-form
//! `η_C = α − i(C)ω` on `N = M × ℝ_t`: `C̃₁ = C̄ + b E` needs `db = η_C`,
//! `C̃₂ = C̄ + a E − ½ ∂_s` needs `da = η_C` and has moment `−a e^{2s}`.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::{DerivedField, ExprField, FieldRef, JetArray};
use crate::geometry::{lie_bracket_jets, lie_derivative_two_form_jets};
use crate::induction::{coordinate_vector, InducedSpace};
use crate::jet::Jet;
use crate::report::{sup, sweep, Check, Diagnostic, Record};
use std::sync::Arc;

/// A vector field `X` on `M` with Hamiltonian `f_X`.
#[derive(Clone)]
pub struct HamiltonianPair {
    pub name: String,
    /// Components `X^i`, shape `[m]`.
    pub x: FieldRef,
    /// `f_X`, shape `[]`.
    pub f: FieldRef,
}

impl HamiltonianPair {
    /// Explicit components and Hamiltonian; consistency is checked by
    /// [`verify_hamiltonian_lift`].
    pub fn new(name: impl Into<String>, x: Vec<Expression>, f: Expression) -> Result<HamiltonianPair> {
        let m = f.dim();
        if x.len() != m || x.iter().any(|e| e.dim() != m) {
            return Err(Error::invalid("Hamiltonian field needs one component per chart coordinate"));
        }
        Ok(HamiltonianPair {
            name: name.into(),
            x: Arc::new(ExprField::dense(&[m], x)?),
            f: Arc::new(ExprField::dense(&[], vec![f])?),
        })
    }

    /// `X^k = ∂_j f π^{jk}`.
    pub fn from_hamiltonian(name: impl Into<String>, omega_inverse: FieldRef, f: Expression) -> HamiltonianPair {
        let m = f.dim();
        let ff: FieldRef = Arc::new(ExprField::dense(&[], vec![f]).expect("scalar field"));
        let (fj, pi) = (ff.clone(), omega_inverse);
        let x = DerivedField::new("hamiltonian_vector", m, vec![m], 1, move |p, k| {
            let f = fj.eval(p, k + 1)?;
            let f = f.get(&[]);
            let pi = pi.eval(p, k)?;
            let grad: Vec<Jet> = (0..m).map(|j| f.derivative(j)).collect();
            Ok(JetArray::from_fn(&[m], |ix| {
                let mut acc = grad[0].zeros_like();
                for (j, g) in grad.iter().enumerate() {
                    acc.mul_add_assign(g, pi.get(&[j, ix[0]]));
                }
                acc
            }))
        })
        .into_ref();
        HamiltonianPair {
            name: name.into(),
            x,
            f: ff,
        }
    }

    pub fn dim(&self) -> usize {
        self.f.nvars()
    }

    /// `[X, Y]` with Hamiltonian `X f_Y = {f_X, f_Y}`.
    pub fn bracket(&self, other: &HamiltonianPair) -> HamiltonianPair {
        let m = self.dim();
        let (x1, x2) = (self.x.clone(), other.x.clone());
        let x = DerivedField::new("bracket_vector", m, vec![m], 1, move |p, k| {
            Ok(lie_bracket_jets(&x1.eval(p, k + 1)?, &x2.eval(p, k + 1)?))
        })
        .into_ref();
        let (x1, f2) = (self.x.clone(), other.f.clone());
        let f = DerivedField::new("poisson_bracket", m, vec![], 1, move |p, k| {
            let x = x1.eval(p, k)?;
            let f = f2.eval(p, k + 1)?;
            let f = f.get(&[]);
            let mut acc = x.get(&[0]).zeros_like();
            for i in 0..m {
                acc.mul_add_assign(x.get(&[i]), &f.derivative(i));
            }
            Ok(JetArray::new(vec![], vec![acc]))
        })
        .into_ref();
        HamiltonianPair {
            name: format!("[{}, {}]", self.name, other.name),
            x,
            f,
        }
    }
}

/// Components of `V^i (∂_i − λ_i ∂_t) + c ∂_t + l ∂_s` on `P`; all inputs share one jet layout.
fn horizontal_plus(x: &JetArray, lam: &JetArray, c: &Jet, l: f64, pd: usize) -> JetArray {
    let m = pd - 2;
    let mut t_comp = c.clone();
    for i in 0..m {
        t_comp.mul_sub_assign(lam.get(&[i]), x.get(&[i]));
    }
    let zero = t_comp.zeros_like();
    JetArray::from_fn(&[pd], |ix| match ix[0] {
        i if i < m => x.get(&[i]).clone(),
        i if i == m => t_comp.clone(),
        _ => zero.lift(l),
    })
}

/// `X̃ = X̄ − f_X E` as a vector field on `P`.
pub fn hamiltonian_lift(hp: &HamiltonianPair, space: &InducedSpace) -> FieldRef {
    let m = space.base_dim();
    let pd = space.dim();
    let (x, f, lam) = (hp.x.clone(), hp.f.clone(), space.spec().lambda.field().clone());
    DerivedField::new("hamiltonian_lift", pd, vec![pd], hp.x.depth(), move |p, k| {
        let xm = &p[..m];
        let xs = x.eval(xm, k)?;
        let f = f.eval(xm, k)?;
        let lam = lam.eval(xm, k)?;
        let map: Vec<usize> = (0..m).collect();
        Ok(horizontal_plus(&xs, &lam, &-f.get(&[]), 0.0, pd).embed(pd, &map))
    })
    .into_ref()
}

/// `(i(V)μ)_ν = V^ρ μ_{ρν}`.
fn contract(v: &JetArray, mu: &JetArray) -> Vec<Jet> {
    let pd = v.shape()[0];
    (0..pd)
        .map(|nu| {
            let mut acc = v.get(&[0]).zeros_like();
            for rho in 0..pd {
                acc.mul_add_assign(v.get(&[rho]), mu.get(&[rho, nu]));
            }
            acc
        })
        .collect()
}

/// Order-1 jet of `e^{2s} g(x)` on `P` given `g` on `M` at order 1.
fn weighted(g: &Jet, p: &[f64]) -> Jet {
    let pd = p.len();
    let map: Vec<usize> = (0..g.nvars()).collect();
    let s = pd - 1;
    let e2s = Jet::variable(pd, g.order(), s, p[s]).scale(2.0).exp();
    &e2s * &g.embed(pd, &map)
}

/// Residual identities of a Hamiltonian lift.
pub fn hamiltonian_checks(name: &str, tol: f64) -> Vec<Check> {
    vec![
        Check::new(format!("i(X)ω − df_X [{name}]"), "i(X)ω = df_X", tol),
        Check::new(
            format!("i(X̃)μ − d(e^{{2s}}f_X) [{name}]"),
            "the lift is Hamiltonian with moment e^{2s}f_X",
            tol,
        ),
        Check::new(format!("L_X̃ μ [{name}]"), "Hamiltonian lifts preserve μ", tol),
        Check::new(format!("ds(X̃) [{name}]"), "ds of the lift vanishes", tol),
        Check::new(format!("[E, X̃] [{name}]"), "the lift commutes with E", tol),
    ]
}

/// Pointwise residuals for [`hamiltonian_checks`] at a point of `P`.
pub fn hamiltonian_residuals(hp: &HamiltonianPair, space: &InducedSpace, p: &[f64]) -> Result<Vec<f64>> {
    let m = space.base_dim();
    let pd = space.dim();
    let x = &p[..m];
    let omega = space.spec().omega.eval(x, 0)?;
    let xv = hp.x.eval(x, 0)?;
    let f1 = hp.f.eval(x, 1)?;
    let f1 = f1.get(&[]);
    let grad = f1.gradient();
    let base = sup((0..m).map(|j| {
        let ix: f64 = (0..m).map(|i| xv.get(&[i]).value() * omega.get(&[i, j]).value()).sum();
        ix - grad[j]
    }));

    let lift = hamiltonian_lift(hp, space);
    let v1 = lift.eval(p, 1)?;
    let mu1 = space.mu_field().eval(p, 1)?;
    let iv = contract(&v1.truncate(0), &mu1.truncate(0));
    let moment = weighted(f1, p);
    let moment_res = sup((0..pd).map(|nu| {
        let d = if nu < m || nu == pd - 1 { moment.gradient()[nu] } else { 0.0 };
        iv[nu].value() - d
    }));
    let lmu = sup(lie_derivative_two_form_jets(&v1, &mu1).values().iter().copied());
    let ds = v1.get(&[pd - 1]).value().abs();
    let e = coordinate_vector(pd, m).eval(p, 1)?;
    let ev = sup(lie_bracket_jets(&e, &v1).values().iter().copied());
    Ok(vec![base, moment_res, lmu, ds, ev])
}

pub fn verify_hamiltonian_lift(
    hp: &HamiltonianPair,
    space: &InducedSpace,
    samples: &[Vec<f64>],
    tol: f64,
) -> (Vec<Record>, Vec<Diagnostic>) {
    sweep(&hamiltonian_checks(&hp.name, tol), samples, |p| hamiltonian_residuals(hp, space, p))
}

/// `[X̃, Ỹ] − ([X, Y])~` at a point of `P`.
pub fn bracket_residual_at(hp1: &HamiltonianPair, hp2: &HamiltonianPair, space: &InducedSpace, p: &[f64]) -> Result<f64> {
    let l1 = hamiltonian_lift(hp1, space).eval(p, 1)?;
    let l2 = hamiltonian_lift(hp2, space).eval(p, 1)?;
    let lhs = lie_bracket_jets(&l1, &l2).values();
    let rhs = hamiltonian_lift(&hp1.bracket(hp2), space).values(p)?;
    Ok(sup(lhs.iter().zip(rhs.iter()).map(|(a, b)| a - b)))
}

/// Max over samples of [`bracket_residual_at`].
pub fn bracket_residual(
    hp1: &HamiltonianPair,
    hp2: &HamiltonianPair,
    space: &InducedSpace,
    samples: &[Vec<f64>],
) -> Result<f64> {
    let mut max = 0.0f64;
    for p in samples {
        max = max.max(bracket_residual_at(hp1, hp2, space, p)?);
    }
    Ok(max)
}

/// A conformal vector field `C` (`L_C ω = ω`) with optional potentials
/// `b` and `a` on `N = M × ℝ_t` (expressions in `x_1 … x_m, x_{m+1} = t`).
#[derive(Clone)]
pub struct ConformalData {
    pub c: FieldRef,
    pub b: Option<Expression>,
    pub a: Option<Expression>,
}

impl ConformalData {
    pub fn new(c: Vec<Expression>, b: Option<Expression>, a: Option<Expression>) -> Result<ConformalData> {
        let m = c.len();
        if c.iter().any(|e| e.dim() != m) {
            return Err(Error::invalid("conformal field needs one component per chart coordinate"));
        }
        for p in b.iter().chain(a.iter()) {
            if p.dim() != m + 1 {
                return Err(Error::invalid("conformal potentials live on (x, t)"));
            }
        }
        Ok(ConformalData {
            c: Arc::new(ExprField::dense(&[m], c)?),
            b,
            a,
        })
    }
}

fn potential_jet(e: &Expression, p: &[f64], order: usize) -> Result<Jet> {
    let m = p.len() - 2;
    let map: Vec<usize> = (0..=m).collect();
    Ok(e.eval_jet(&p[..=m], order)?.embed(p.len(), &map))
}

fn conformal_lift(cd: &ConformalData, space: &InducedSpace, potential: Expression, l: f64, name: &'static str) -> FieldRef {
    let m = space.base_dim();
    let pd = space.dim();
    let (c, lam) = (cd.c.clone(), space.spec().lambda.field().clone());
    let map: Vec<usize> = (0..m).collect();
    DerivedField::new(name, pd, vec![pd], 0, move |p, k| {
        let xm = &p[..m];
        let cv = c.eval(xm, k)?.embed(pd, &map);
        let lam = lam.eval(xm, k)?.embed(pd, &map);
        let b = potential_jet(&potential, p, k)?;
        Ok(horizontal_plus(&cv, &lam, &b, l, pd))
    })
    .into_ref()
}

/// `C̃₁ = C̄ + b E`.
pub fn conformal_lift_1(cd: &ConformalData, space: &InducedSpace) -> Result<FieldRef> {
    let b = cd
        .b
        .clone()
        .ok_or_else(|| Error::invalid("conformal lift C̃₁ needs the potential b"))?;
    Ok(conformal_lift(cd, space, b, 0.0, "conformal_lift_1"))
}

/// `C̃₂ = C̄ + a E − ½ ∂_s`.
pub fn conformal_lift_2(cd: &ConformalData, space: &InducedSpace) -> Result<FieldRef> {
    let a = cd
        .a
        .clone()
        .ok_or_else(|| Error::invalid("conformal lift C̃₂ needs the potential a"))?;
    Ok(conformal_lift(cd, space, a, -0.5, "conformal_lift_2"))
}

/// Residual of `dβ − η_C` on `N` at the `(x, t)` part of `p`, and of `Zβ − 1`.
fn potential_residuals(cd: &ConformalData, space: &InducedSpace, beta: &Expression, p: &[f64]) -> Result<(f64, f64)> {
    let m = space.base_dim();
    let x = &p[..m];
    let db = beta.eval_jet(&p[..=m], 1)?.gradient();
    let c = cd.c.eval(x, 0)?;
    let omega = space.spec().omega.eval(x, 0)?;
    let lam = space.spec().lambda.eval(x, 0)?;
    let mut res = (db[m] - 1.0).abs();
    for i in 0..m {
        let ic: f64 = (0..m).map(|k| c.get(&[k]).value() * omega.get(&[k, i]).value()).sum();
        res = res.max((db[i] - (lam.get(&[i]).value() - ic)).abs());
    }
    Ok((res, (db[m] - 1.0).abs()))
}

/// Names, anchors and tolerances of the conformal checks that `cd` supports.
pub fn conformal_checks(cd: &ConformalData, tol: f64) -> Vec<Check> {
    let mut out = vec![Check::new("L_C ω − ω", "C is conformal: L_C ω = ω", tol)];
    if cd.b.is_some() {
        out.extend([
            Check::new("Zb − 1", "the potential b satisfies Zb = 1", tol),
            Check::new("db − (α − i(C)ω)", "α − i(C)ω = db", tol),
            Check::new("L_C̃₁ μ − μ", "the lift C̃₁ is conformal with factor 1", tol),
            Check::new("ds(C̃₁)", "ds(C̃₁) = 0", tol),
        ]);
    }
    if cd.a.is_some() {
        out.extend([
            Check::new("da − (α − i(C)ω)", "α − i(C)ω = da", tol),
            Check::new("L_C̃₂ μ", "the lift C̃₂ with l = −½ preserves μ", tol),
            Check::new("i(C̃₂)μ + d(a e^{2s})", "C̃₂ is Hamiltonian with moment −a e^{2s}", tol),
            Check::new("ds(C̃₂) + ½", "ds(C̃₂) = −½", tol),
        ]);
    }
    out
}

/// Pointwise residuals for [`conformal_checks`] at a point of `P`.
pub fn conformal_residuals(cd: &ConformalData, space: &InducedSpace, p: &[f64]) -> Result<Vec<f64>> {
    let m = space.base_dim();
    let pd = space.dim();
    let x = &p[..m];
    let c1 = cd.c.eval(x, 1)?;
    let w1 = space.spec().omega.eval(x, 1)?;
    let lc = lie_derivative_two_form_jets(&c1, &w1).values() - w1.truncate(0).values();
    let mut out = vec![sup(lc.iter().copied())];
    let mu1 = space.mu_field().eval(p, 1)?;
    let mu0 = mu1.truncate(0).values();
    if let Some(b) = &cd.b {
        let (db, zb) = potential_residuals(cd, space, b, p)?;
        let v = conformal_lift_1(cd, space)?.eval(p, 1)?;
        let l = lie_derivative_two_form_jets(&v, &mu1).values() - &mu0;
        out.extend([zb, db, sup(l.iter().copied()), v.get(&[pd - 1]).value().abs()]);
    }
    if let Some(a) = &cd.a {
        let (da, _) = potential_residuals(cd, space, a, p)?;
        let v = conformal_lift_2(cd, space)?.eval(p, 1)?;
        let l = lie_derivative_two_form_jets(&v, &mu1).values();
        let iv = contract(&v.truncate(0), &mu1.truncate(0));
        let s = pd - 1;
        let e2s = Jet::variable(pd, 1, s, p[s]).scale(2.0).exp();
        let moment = &e2s * &potential_jet(a, p, 1)?;
        let g = moment.gradient();
        let im = sup((0..pd).map(|nu| iv[nu].value() + g[nu]));
        out.extend([da, sup(l.iter().copied()), im, (v.get(&[s]).value() + 0.5).abs()]);
    }
    Ok(out)
}

pub fn verify_conformal(
    cd: &ConformalData,
    space: &InducedSpace,
    samples: &[Vec<f64>],
    tol: f64,
) -> (Vec<Record>, Vec<Diagnostic>) {
    sweep(&conformal_checks(cd, tol), samples, |p| conformal_residuals(cd, space, p))
}

/// Moment of `C̃₂`: `−a e^{2s}`.
pub fn conformal_moment_2(cd: &ConformalData, p: &[f64]) -> Result<f64> {
    let a = cd
        .a
        .as_ref()
        .ok_or_else(|| Error::invalid("conformal lift C̃₂ needs the potential a"))?;
    let m = p.len() - 2;
    Ok(-a.eval_scalar(&p[..=m])? * (2.0 * p[m + 1]).exp())
}
