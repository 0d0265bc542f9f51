//! Chart-based tensor calculus on `(M, ω, ∇)`.
//!
//! Index conventions used throughout:
//!
//! * `Γ[k][i][j] = Γ^k_{ij}` with `∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k`;
//! * `R[l][k][i][j] = R^l_{kij}` with `R(∂_i, ∂_j) ∂_k = R^l_{kij} ∂_l` and
//!   `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`;
//! * `r_{ij} = R^l_{jil}`, i.e. `r(X,Y) = Tr[Z ↦ R(X,Z)Y]`;
//! * `ω(X,Y) = ω_{ij} X^i Y^j`, `π = ω^{-1}` with `π^{ij} ω_{jk} = δ^i_k`;
//! * endomorphisms from bilinear forms: `b(X,Y) = ω(X, A Y)`, so `A = π b`.
//!
//! The `*_jets` kernels take inputs one order above their output where a
//! derivative is involved; the point-valued wrappers evaluate at order 0.

use std::sync::Arc;

use ndarray::{Array2, Array3, Array4, Ix2, Ix3, Ix4};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::{invert, DerivedField, ExprField, FieldRef, JetArray, JetField};
use crate::jet::Jet;

/// Coordinate chart of even dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    dim: usize,
    labels: Vec<String>,
}

impl Chart {
    /// Even dimension ≥ 4.
    pub fn new(dim: usize) -> Result<Chart> {
        Chart::with_options(dim, false)
    }

    /// `allow_small` admits dimension 2 for smoke tests.
    pub fn with_options(dim: usize, allow_small: bool) -> Result<Chart> {
        let min = if allow_small { 2 } else { 4 };
        if dim % 2 != 0 || dim < min {
            return Err(Error::invalid(format!(
                "chart dimension must be even and at least {min}, got {dim}"
            )));
        }
        Ok(Chart {
            dim,
            labels: (1..=dim).map(|i| format!("x{i}")).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half the dimension.
    pub fn n(&self) -> usize {
        self.dim / 2
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A 1-form `λ = λ_i dx^i`.
#[derive(Clone)]
pub struct OneFormField {
    dim: usize,
    field: FieldRef,
}

impl OneFormField {
    pub fn new(chart: &Chart, components: Vec<Expression>) -> Result<OneFormField> {
        if components.len() != chart.dim() {
            return Err(Error::invalid(format!(
                "1-form needs {} components, got {}",
                chart.dim(),
                components.len()
            )));
        }
        if components.iter().any(|e| e.dim() != chart.dim()) {
            return Err(Error::invalid("1-form components must live on the chart"));
        }
        let field = ExprField::dense(&[chart.dim()], components)?;
        Ok(OneFormField {
            dim: chart.dim(),
            field: Arc::new(field),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn eval(&self, point: &[f64], order: usize) -> Result<JetArray> {
        self.field.eval(point, order)
    }

    /// `dλ` as a 2-form field.
    pub fn exterior_derivative(&self) -> TwoFormField {
        let lambda = self.field.clone();
        let d = self.dim;
        let field = DerivedField::new("d_lambda", d, vec![d, d], 1, move |p, k| {
            Ok(d_one_form_jets(&lambda.eval(p, k + 1)?))
        });
        TwoFormField {
            dim: d,
            field: field.into_ref(),
        }
    }
}

/// A 2-form `ω = ½ ω_{ij} dx^i ∧ dx^j`, stored as its antisymmetric matrix.
#[derive(Clone)]
pub struct TwoFormField {
    dim: usize,
    field: FieldRef,
}

impl TwoFormField {
    /// Build from the strictly upper entries `(i, j, ω_{ij})`, `i < j`, 0-based.
    /// Missing entries are zero.
    pub fn from_upper(chart: &Chart, entries: Vec<(usize, usize, Expression)>) -> Result<TwoFormField> {
        let d = chart.dim();
        let mut slots = vec![None; d * d];
        let mut exprs = Vec::new();
        for (i, j, e) in entries {
            if i >= j || j >= d {
                return Err(Error::invalid(format!("2-form entry ({i},{j}) must satisfy i < j < {d}")));
            }
            if slots[i * d + j].is_some() {
                return Err(Error::invalid(format!("duplicate 2-form entry ({i},{j})")));
            }
            slots[i * d + j] = Some((exprs.len(), 1.0));
            slots[j * d + i] = Some((exprs.len(), -1.0));
            exprs.push(e);
        }
        if exprs.is_empty() {
            exprs.push(Expression::constant(0.0, d));
        }
        Ok(TwoFormField {
            dim: d,
            field: Arc::new(ExprField::with_slots(&[d, d], exprs, slots)?),
        })
    }

    /// Wrap a computed field of shape `[d, d]`; antisymmetry is the caller's contract.
    pub fn from_field(field: FieldRef) -> TwoFormField {
        let d = field.shape()[0];
        assert_eq!(field.shape(), &[d, d]);
        TwoFormField { dim: d, field }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn eval(&self, point: &[f64], order: usize) -> Result<JetArray> {
        self.field.eval(point, order)
    }

    /// Poisson tensor `π = ω^{-1}` as a field.
    pub fn inverse_field(&self) -> DerivedField {
        let omega = self.field.clone();
        let d = self.dim;
        DerivedField::new("omega_inverse", d, vec![d, d], 0, move |p, k| {
            invert(&omega.eval(p, k)?).ok_or_else(|| Error::singular("ω", p))
        })
    }
}

/// Torsion-free linear connection given by its Christoffel symbols.
#[derive(Clone)]
pub struct ConnectionField {
    dim: usize,
    christoffel: FieldRef,
}

impl ConnectionField {
    /// From lower-symmetric entries `(k, i, j, Γ^k_{ij})` with `i ≤ j`, 0-based.
    pub fn from_symmetric(chart: &Chart, entries: Vec<(usize, usize, usize, Expression)>) -> Result<ConnectionField> {
        let d = chart.dim();
        let mut slots = vec![None; d * d * d];
        let mut exprs = Vec::new();
        for (k, i, j, e) in entries {
            if k >= d || i > j || j >= d {
                return Err(Error::invalid(format!(
                    "Christoffel entry ({k},{i},{j}) must satisfy i ≤ j < {d}"
                )));
            }
            if slots[(k * d + i) * d + j].is_some() {
                return Err(Error::invalid(format!("duplicate Christoffel entry ({k},{i},{j})")));
            }
            slots[(k * d + i) * d + j] = Some((exprs.len(), 1.0));
            slots[(k * d + j) * d + i] = Some((exprs.len(), 1.0));
            exprs.push(e);
        }
        if exprs.is_empty() {
            exprs.push(Expression::constant(0.0, d));
        }
        Ok(ConnectionField {
            dim: d,
            christoffel: Arc::new(ExprField::with_slots(&[d, d, d], exprs, slots)?),
        })
    }

    pub fn flat(chart: &Chart) -> ConnectionField {
        ConnectionField::from_symmetric(chart, Vec::new()).expect("flat connection")
    }

    /// `Γ_{kij} = ∂_k∂_i∂_j φ` raised with `π`: `Γ^k_{ij} = π^{kl} Γ_{lij}`.
    ///
    /// Full symmetry of `Γ_{kij}` makes the connection torsion-free, and
    /// symplectic whenever `ω` is constant. The potential may be evaluated
    /// three orders above its own cap.
    pub fn from_potential(potential: Expression, omega: &TwoFormField) -> ConnectionField {
        let d = omega.dim();
        assert_eq!(potential.dim(), d);
        let cap = potential.max_order() + 3;
        let potential = potential.with_max_order(cap);
        let pi = omega.inverse_field();
        let field = DerivedField::new("potential_christoffel", d, vec![d, d, d], 3, move |p, k| {
            let phi = potential.eval_jet(p, k + 3)?;
            let pi = pi.eval(p, k)?;
            let mut third = Vec::with_capacity(d * d * d);
            for l in 0..d {
                let dl = phi.derivative(l);
                for i in 0..d {
                    let dli = dl.derivative(i);
                    for j in 0..d {
                        third.push(dli.derivative(j));
                    }
                }
            }
            let lowered = JetArray::new(vec![d, d, d], third);
            Ok(JetArray::from_fn(&[d, d, d], |ix| {
                let mut acc = pi.get(&[0, 0]).zeros_like();
                for l in 0..d {
                    acc.mul_add_assign(pi.get(&[ix[0], l]), lowered.get(&[l, ix[1], ix[2]]));
                }
                acc
            }))
        });
        ConnectionField {
            dim: d,
            christoffel: field.into_ref(),
        }
    }

    /// Wrap a computed Christoffel field of shape `[d, d, d]`.
    pub fn from_field(christoffel: FieldRef) -> ConnectionField {
        let d = christoffel.shape()[0];
        assert_eq!(christoffel.shape(), &[d, d, d]);
        ConnectionField { dim: d, christoffel }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn christoffel(&self) -> &FieldRef {
        &self.christoffel
    }

    pub fn eval(&self, point: &[f64], order: usize) -> Result<JetArray> {
        self.christoffel.eval(point, order)
    }

    pub fn curvature_field(&self) -> DerivedField {
        let g = self.christoffel.clone();
        let d = self.dim;
        DerivedField::new("curvature", d, vec![d, d, d, d], 1, move |p, k| {
            Ok(curvature_jets(&g.eval(p, k + 1)?))
        })
    }

    pub fn ricci_field(&self) -> DerivedField {
        let g = self.christoffel.clone();
        let d = self.dim;
        DerivedField::new("ricci", d, vec![d, d], 1, move |p, k| {
            Ok(ricci_jets(&curvature_jets(&g.eval(p, k + 1)?)))
        })
    }

    /// `∇A` for an endomorphism field `A`, shape `[i, k, j]`.
    pub fn nabla_endo_field(&self, a: FieldRef) -> DerivedField {
        let g = self.christoffel.clone();
        let d = self.dim;
        let depth = a.depth() + 1;
        DerivedField::new("nabla_endo", d, vec![d, d, d], depth, move |p, k| {
            Ok(nabla_endo_jets(&g.eval(p, k)?, &a.eval(p, k + 1)?))
        })
    }

    /// `∇V` for a vector field `V`, shape `[i, k]`.
    pub fn nabla_vector_field(&self, v: FieldRef) -> DerivedField {
        let g = self.christoffel.clone();
        let d = self.dim;
        let depth = v.depth() + 1;
        DerivedField::new("nabla_vector", d, vec![d, d], depth, move |p, k| {
            Ok(nabla_vector_jets(&g.eval(p, k)?, &v.eval(p, k + 1)?))
        })
    }
}

fn zero_like(a: &JetArray) -> Jet {
    a.data()[0].zeros_like()
}

pub fn d_one_form_jets(lambda: &JetArray) -> JetArray {
    let d = lambda.shape()[0];
    let grads: Vec<JetArray> = (0..d).map(|i| lambda.derivative(i)).collect();
    JetArray::from_fn(&[d, d], |ix| {
        let (i, j) = (ix[0], ix[1]);
        grads[i].get(&[j]) - grads[j].get(&[i])
    })
}

pub fn d_two_form_jets(omega: &JetArray) -> JetArray {
    let d = omega.shape()[0];
    let grads: Vec<JetArray> = (0..d).map(|i| omega.derivative(i)).collect();
    JetArray::from_fn(&[d, d, d], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        &(grads[i].get(&[j, k]) - grads[j].get(&[i, k])) + grads[k].get(&[i, j])
    })
}

pub fn torsion_jets(gamma: &JetArray) -> JetArray {
    let d = gamma.shape()[0];
    JetArray::from_fn(&[d, d, d], |ix| gamma.get(&[ix[0], ix[1], ix[2]]) - gamma.get(&[ix[0], ix[2], ix[1]]))
}

/// `R^l_{kij}` from `Γ` one order higher.
pub fn curvature_jets(gamma: &JetArray) -> JetArray {
    let d = gamma.shape()[0];
    let order = gamma.order() - 1;
    let dg: Vec<JetArray> = (0..d).map(|i| gamma.derivative(i)).collect();
    let g = gamma.truncate(order);
    JetArray::from_fn(&[d, d, d, d], |ix| {
        let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = dg[i].get(&[l, j, k]) - dg[j].get(&[l, i, k]);
        for m in 0..d {
            acc.mul_add_assign(g.get(&[l, i, m]), g.get(&[m, j, k]));
            acc.mul_sub_assign(g.get(&[l, j, m]), g.get(&[m, i, k]));
        }
        acc
    })
}

/// `r_{ij} = R^l_{jil}`.
pub fn ricci_jets(curvature: &JetArray) -> JetArray {
    let d = curvature.shape()[0];
    JetArray::from_fn(&[d, d], |ix| {
        let mut acc = zero_like(curvature);
        for l in 0..d {
            acc += curvature.get(&[l, ix[1], ix[0], l]);
        }
        acc
    })
}

/// `(∇_k ω)_{ij} = ∂_k ω_{ij} − Γ^l_{ki} ω_{lj} − Γ^l_{kj} ω_{il}`; `ω` one order higher.
pub fn nabla_two_form_jets(gamma: &JetArray, omega: &JetArray) -> JetArray {
    let d = omega.shape()[0];
    let order = omega.order() - 1;
    let dw: Vec<JetArray> = (0..d).map(|k| omega.derivative(k)).collect();
    let w = omega.truncate(order);
    let g = gamma.truncate(order);
    JetArray::from_fn(&[d, d, d], |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        let mut acc = dw[k].get(&[i, j]).clone();
        for l in 0..d {
            acc.mul_sub_assign(g.get(&[l, k, i]), w.get(&[l, j]));
            acc.mul_sub_assign(g.get(&[l, k, j]), w.get(&[i, l]));
        }
        acc
    })
}

/// `A^k_j = π^{ki} b_{ij}`.
pub fn endo_from_bilinear_jets(pi: &JetArray, b: &JetArray) -> JetArray {
    let d = pi.shape()[0];
    JetArray::from_fn(&[d, d], |ix| {
        let mut acc = zero_like(pi);
        for i in 0..d {
            acc.mul_add_assign(pi.get(&[ix[0], i]), b.get(&[i, ix[1]]));
        }
        acc
    })
}

/// `(∇_i A)^k_j = ∂_i A^k_j + Γ^k_{il} A^l_j − Γ^l_{ij} A^k_l`; `A` one order higher.
pub fn nabla_endo_jets(gamma: &JetArray, a: &JetArray) -> JetArray {
    let d = a.shape()[0];
    let order = a.order() - 1;
    let da: Vec<JetArray> = (0..d).map(|i| a.derivative(i)).collect();
    let a0 = a.truncate(order);
    let g = gamma.truncate(order);
    JetArray::from_fn(&[d, d, d], |ix| {
        let (i, k, j) = (ix[0], ix[1], ix[2]);
        let mut acc = da[i].get(&[k, j]).clone();
        for l in 0..d {
            acc.mul_add_assign(g.get(&[k, i, l]), a0.get(&[l, j]));
            acc.mul_sub_assign(g.get(&[l, i, j]), a0.get(&[k, l]));
        }
        acc
    })
}

/// `(∇_i V)^k = ∂_i V^k + Γ^k_{il} V^l`; `V` one order higher.
pub fn nabla_vector_jets(gamma: &JetArray, v: &JetArray) -> JetArray {
    let d = v.shape()[0];
    let order = v.order() - 1;
    let dv: Vec<JetArray> = (0..d).map(|i| v.derivative(i)).collect();
    let v0 = v.truncate(order);
    let g = gamma.truncate(order);
    JetArray::from_fn(&[d, d], |ix| {
        let (i, k) = (ix[0], ix[1]);
        let mut acc = dv[i].get(&[k]).clone();
        for l in 0..d {
            acc.mul_add_assign(g.get(&[k, i, l]), v0.get(&[l]));
        }
        acc
    })
}

/// `E^l_{kij} = c[2ω_{ij}ρ^l_k − ω_{jk}ρ^l_i + ω_{ik}ρ^l_j − r_{jk}δ^l_i + r_{ik}δ^l_j]`,
/// `c = 1/(2(n+1))`, `ρ = π r`.
pub fn e_component_jets(omega: &JetArray, rho: &JetArray, ricci: &JetArray) -> JetArray {
    let d = omega.shape()[0];
    let n = d / 2;
    let c = 1.0 / (2.0 * (n as f64 + 1.0));
    JetArray::from_fn(&[d, d, d, d], |ix| {
        let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = zero_like(omega);
        acc.mul_add_assign(omega.get(&[i, j]), &rho.get(&[l, k]).scale(2.0));
        acc.mul_sub_assign(omega.get(&[j, k]), rho.get(&[l, i]));
        acc.mul_add_assign(omega.get(&[i, k]), rho.get(&[l, j]));
        if l == i {
            acc -= ricci.get(&[j, k]);
        }
        if l == j {
            acc += ricci.get(&[i, k]);
        }
        acc.scale(c)
    })
}

/// `[V, W]^k = V^i ∂_i W^k − W^i ∂_i V^k`; inputs one order higher.
pub fn lie_bracket_jets(v: &JetArray, w: &JetArray) -> JetArray {
    let d = v.shape()[0];
    let order = v.order() - 1;
    let dv: Vec<JetArray> = (0..d).map(|i| v.derivative(i)).collect();
    let dw: Vec<JetArray> = (0..d).map(|i| w.derivative(i)).collect();
    let v0 = v.truncate(order);
    let w0 = w.truncate(order);
    JetArray::from_fn(&[d], |ix| {
        let k = ix[0];
        let mut acc = zero_like(&v0);
        for i in 0..d {
            acc.mul_add_assign(v0.get(&[i]), dw[i].get(&[k]));
            acc.mul_sub_assign(w0.get(&[i]), dv[i].get(&[k]));
        }
        acc
    })
}

/// `(L_V ω)_{ij} = V^k ∂_k ω_{ij} + ω_{kj} ∂_i V^k + ω_{ik} ∂_j V^k`; inputs one order higher.
pub fn lie_derivative_two_form_jets(v: &JetArray, omega: &JetArray) -> JetArray {
    let d = v.shape()[0];
    let order = v.order() - 1;
    let dv: Vec<JetArray> = (0..d).map(|i| v.derivative(i)).collect();
    let dw: Vec<JetArray> = (0..d).map(|i| omega.derivative(i)).collect();
    let v0 = v.truncate(order);
    let w0 = omega.truncate(order);
    JetArray::from_fn(&[d, d], |ix| {
        let (i, j) = (ix[0], ix[1]);
        let mut acc = zero_like(&v0);
        for k in 0..d {
            acc.mul_add_assign(v0.get(&[k]), dw[k].get(&[i, j]));
            acc.mul_add_assign(w0.get(&[k, j]), dv[i].get(&[k]));
            acc.mul_add_assign(w0.get(&[i, k]), dv[j].get(&[k]));
        }
        acc
    })
}

/// `(L_V ∇)^k_{ij} = ∂_i∂_j V^k + V^l ∂_l Γ^k_{ij} − Γ^l_{ij} ∂_l V^k + Γ^k_{lj} ∂_i V^l + Γ^k_{il} ∂_j V^l`.
///
/// `V` must be two orders above the output, `Γ` one order above.
pub fn lie_derivative_connection_jets(v: &JetArray, gamma: &JetArray) -> JetArray {
    let d = v.shape()[0];
    let order = gamma.order() - 1;
    let dv: Vec<JetArray> = (0..d).map(|i| v.derivative(i)).collect();
    let ddv: Vec<Vec<JetArray>> = dv.iter().map(|a| (0..d).map(|j| a.derivative(j)).collect()).collect();
    let dv0: Vec<JetArray> = dv.iter().map(|a| a.truncate(order)).collect();
    let dg: Vec<JetArray> = (0..d).map(|l| gamma.derivative(l)).collect();
    let v0 = v.truncate(order);
    let g0 = gamma.truncate(order);
    JetArray::from_fn(&[d, d, d], |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        let mut acc = ddv[i][j].get(&[k]).clone();
        for l in 0..d {
            acc.mul_add_assign(v0.get(&[l]), dg[l].get(&[k, i, j]));
            acc.mul_sub_assign(g0.get(&[l, i, j]), dv0[l].get(&[k]));
            acc.mul_add_assign(g0.get(&[k, l, j]), dv0[i].get(&[l]));
            acc.mul_add_assign(g0.get(&[k, i, l]), dv0[j].get(&[l]));
        }
        acc
    })
}

fn into2(a: JetArray) -> Array2<f64> {
    a.values().into_dimensionality::<Ix2>().expect("rank 2")
}

fn into3(a: JetArray) -> Array3<f64> {
    a.values().into_dimensionality::<Ix3>().expect("rank 3")
}

fn into4(a: JetArray) -> Array4<f64> {
    a.values().into_dimensionality::<Ix4>().expect("rank 4")
}

pub fn d_one_form(lambda: &OneFormField, point: &[f64]) -> Result<Array2<f64>> {
    Ok(into2(d_one_form_jets(&lambda.eval(point, 1)?)))
}

pub fn d_two_form(omega: &TwoFormField, point: &[f64]) -> Result<Array3<f64>> {
    Ok(into3(d_two_form_jets(&omega.eval(point, 1)?)))
}

pub fn omega_inverse(omega: &TwoFormField, point: &[f64]) -> Result<Array2<f64>> {
    Ok(into2(omega.inverse_field().eval(point, 0)?))
}

pub fn torsion(nabla: &ConnectionField, point: &[f64]) -> Result<Array3<f64>> {
    Ok(into3(torsion_jets(&nabla.eval(point, 0)?)))
}

pub fn nabla_two_form(nabla: &ConnectionField, omega: &TwoFormField, point: &[f64]) -> Result<Array3<f64>> {
    Ok(into3(nabla_two_form_jets(&nabla.eval(point, 0)?, &omega.eval(point, 1)?)))
}

pub fn curvature(nabla: &ConnectionField, point: &[f64]) -> Result<Array4<f64>> {
    Ok(into4(curvature_jets(&nabla.eval(point, 1)?)))
}

pub fn ricci(nabla: &ConnectionField, point: &[f64]) -> Result<Array2<f64>> {
    Ok(into2(ricci_jets(&curvature_jets(&nabla.eval(point, 1)?))))
}

/// Symmetry tolerance for bilinear inputs to [`endo_from_bilinear`].
const SYMMETRY_TOL: f64 = 1e-12;

/// `σ` with `b(X,Y) = ω(X, σY)` for a symmetric bilinear field `b`.
pub fn endo_from_bilinear(omega: &TwoFormField, b: &dyn JetField, point: &[f64]) -> Result<Array2<f64>> {
    let bj = b.eval(point, 0)?;
    let bv = into2(bj.clone());
    let scale = bv.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if (&bv - &bv.t()).iter().any(|v| v.abs() > SYMMETRY_TOL * scale) {
        return Err(Error::invalid("bilinear form is not symmetric"));
    }
    let pi = omega.inverse_field().eval(point, 0)?;
    Ok(into2(endo_from_bilinear_jets(&pi, &bj)))
}

/// Ricci endomorphism `ρ`, `r(X,Y) = ω(X, ρY)`.
pub fn rho_field(nabla: &ConnectionField, omega: &TwoFormField) -> DerivedField {
    let ric = nabla.ricci_field();
    let pi = omega.inverse_field();
    let d = nabla.dim();
    DerivedField::new("rho", d, vec![d, d], 1, move |p, k| {
        Ok(endo_from_bilinear_jets(&pi.eval(p, k)?, &ric.eval(p, k)?))
    })
}

pub fn rho_endomorphism(nabla: &ConnectionField, omega: &TwoFormField, point: &[f64]) -> Result<Array2<f64>> {
    Ok(into2(rho_field(nabla, omega).eval(point, 0)?))
}

/// `(∇_i A)^k_j` at a point, shape `[i, k, j]`.
pub fn covariant_derivative_endo(nabla: &ConnectionField, a: FieldRef, point: &[f64]) -> Result<Array3<f64>> {
    Ok(into3(nabla.nabla_endo_field(a).eval(point, 0)?))
}

/// `(∇_i V)^k` at a point, shape `[i, k]`.
pub fn covariant_derivative_vector(nabla: &ConnectionField, v: FieldRef, point: &[f64]) -> Result<Array2<f64>> {
    Ok(into2(nabla.nabla_vector_field(v).eval(point, 0)?))
}

pub fn e_component_field(nabla: &ConnectionField, omega: &TwoFormField) -> DerivedField {
    let ric = nabla.ricci_field();
    let pi = omega.inverse_field();
    let om = omega.field().clone();
    let d = nabla.dim();
    DerivedField::new("e_component", d, vec![d, d, d, d], 1, move |p, k| {
        let r = ric.eval(p, k)?;
        let rho = endo_from_bilinear_jets(&pi.eval(p, k)?, &r);
        Ok(e_component_jets(&om.eval(p, k)?, &rho, &r))
    })
}

pub fn e_component(nabla: &ConnectionField, omega: &TwoFormField, point: &[f64]) -> Result<Array4<f64>> {
    Ok(into4(e_component_field(nabla, omega).eval(point, 0)?))
}

pub fn w_component(nabla: &ConnectionField, omega: &TwoFormField, point: &[f64]) -> Result<Array4<f64>> {
    Ok(curvature(nabla, point)? - e_component(nabla, omega, point)?)
}

/// Closedness and nondegeneracy of a 2-form over sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticVerdict {
    pub max_closedness: f64,
    pub min_abs_det: f64,
    pub max_antisymmetry: f64,
    pub closed: bool,
    pub nondegenerate: bool,
    pub diagnostics: Vec<String>,
}

impl SymplecticVerdict {
    pub fn passes(&self) -> bool {
        self.closed && self.nondegenerate
    }
}

/// Passes iff `max |dω| ≤ tol` and `|det ω| ≥ tol` at every sample.
pub fn check_symplectic(omega: &TwoFormField, samples: &[Vec<f64>], tol: f64) -> Result<SymplecticVerdict> {
    if samples.is_empty() {
        return Err(Error::invalid("check_symplectic needs at least one sample"));
    }
    let mut v = SymplecticVerdict {
        max_closedness: 0.0,
        min_abs_det: f64::INFINITY,
        max_antisymmetry: 0.0,
        closed: true,
        nondegenerate: true,
        diagnostics: Vec::new(),
    };
    for p in samples {
        let w = omega.eval(p, 1)?;
        let dw = d_two_form_jets(&w).values();
        let closed = dw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let m = into2(w.truncate(0));
        let anti = (&m + &m.t()).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let d = m.nrows();
        let det = nalgebra::DMatrix::from_fn(d, d, |i, j| m[[i, j]]).determinant().abs();
        v.max_closedness = v.max_closedness.max(closed);
        v.max_antisymmetry = v.max_antisymmetry.max(anti);
        v.min_abs_det = v.min_abs_det.min(det);
        if closed > tol {
            v.closed = false;
            v.diagnostics.push(format!("dω = {closed:e} at {p:?}"));
        }
        if det < tol {
            v.nondegenerate = false;
            v.diagnostics.push(format!("|det ω| = {det:e} at {p:?}"));
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RicciTypeVerdict {
    pub max_w: f64,
    pub pass: bool,
}

/// Ricci type iff `max |W| ≤ tol` over the samples.
pub fn is_ricci_type(nabla: &ConnectionField, omega: &TwoFormField, samples: &[Vec<f64>], tol: f64) -> Result<RicciTypeVerdict> {
    let mut max_w = 0.0f64;
    for p in samples {
        let w = w_component(nabla, omega, p)?;
        max_w = w.iter().fold(max_w, |m, x| m.max(x.abs()));
    }
    Ok(RicciTypeVerdict {
        max_w,
        pass: max_w <= tol,
    })
}

/// `max |a_ij|`.
pub fn max_abs<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn std_point() -> Vec<f64> {
        vec![0.3, -0.2, 0.7, 0.1]
    }

    #[test]
    fn chart_rejects_odd_and_small() {
        assert!(Chart::new(3).is_err());
        assert!(Chart::new(2).is_err());
        assert!(Chart::with_options(2, true).is_ok());
        assert_eq!(Chart::new(6).unwrap().n(), 3);
    }

    #[test]
    fn standard_lambda_gives_standard_omega() {
        let spec = fixtures::flat4();
        let w = d_one_form(&spec.lambda, &std_point()).unwrap();
        assert_eq!(w[[2, 0]], 1.0);
        assert_eq!(w[[3, 1]], 1.0);
        assert_eq!(w[[0, 2]], -1.0);
        assert_eq!(w[[1, 3]], -1.0);
        assert_eq!(max_abs(&(&w + &w.t())), 0.0);
    }

    #[test]
    fn exact_form_has_zero_curl() {
        let chart = Chart::new(4).unwrap();
        let e = |s: &str| Expression::parse(s, 4).unwrap();
        // d(x1 x2) = x2 dx1 + x1 dx2
        let lambda = OneFormField::new(&chart, vec![e("x2"), e("x1"), e("0"), e("0")]).unwrap();
        assert_eq!(max_abs(&d_one_form(&lambda, &std_point()).unwrap()), 0.0);
    }

    #[test]
    fn non_closed_two_form() {
        let chart = Chart::new(4).unwrap();
        // x1 dx2 ∧ dx3
        let w = TwoFormField::from_upper(&chart, vec![(1, 2, Expression::parse("x1", 4).unwrap())]).unwrap();
        let dw = d_two_form(&w, &std_point()).unwrap();
        assert_eq!(dw[[0, 1, 2]], 1.0);
        let v = check_symplectic(&w, &[std_point()], 1e-9).unwrap();
        assert!(!v.closed);
    }

    #[test]
    fn degenerate_form_fails() {
        let chart = Chart::new(4).unwrap();
        let w = TwoFormField::from_upper(&chart, vec![(0, 1, Expression::constant(1.0, 4))]).unwrap();
        let v = check_symplectic(&w, &[std_point()], 1e-9).unwrap();
        assert!(v.closed);
        assert!(!v.nondegenerate);
        assert!(!v.passes());
        assert!(matches!(omega_inverse(&w, &std_point()), Err(Error::Singular { .. })));
    }

    #[test]
    fn standard_form_passes_and_inverts() {
        let spec = fixtures::flat4();
        assert!(check_symplectic(&spec.omega, &[std_point()], 1e-9).unwrap().passes());
        let pi = omega_inverse(&spec.omega, &std_point()).unwrap();
        let w = spec.omega.field().values(&std_point()).unwrap().into_dimensionality::<Ix2>().unwrap();
        let prod = pi.dot(&w);
        assert_eq!(prod, Array2::<f64>::eye(4));
    }

    #[test]
    fn flat_connection_has_nothing() {
        let spec = fixtures::flat4();
        let p = std_point();
        assert_eq!(max_abs(&curvature(&spec.connection, &p).unwrap()), 0.0);
        assert_eq!(max_abs(&ricci(&spec.connection, &p).unwrap()), 0.0);
        assert_eq!(max_abs(&e_component(&spec.connection, &spec.omega, &p).unwrap()), 0.0);
        assert_eq!(max_abs(&nabla_two_form(&spec.connection, &spec.omega, &p).unwrap()), 0.0);
    }

    #[test]
    fn asymmetric_christoffels_show_torsion() {
        let chart = Chart::new(4).unwrap();
        let e = Expression::parse("x1", 4).unwrap();
        let mut slots = vec![None; 64];
        slots[1] = Some((0, 1.0)); // Γ^0_{01}
        let g = ExprField::with_slots(&[4, 4, 4], vec![e], slots).unwrap();
        let c = ConnectionField::from_field(Arc::new(g));
        let t = torsion(&c, &std_point()).unwrap();
        assert_eq!(t[[0, 0, 1]], 0.3);
        assert_eq!(t[[0, 1, 0]], -0.3);
        let _ = chart;
    }

    #[test]
    fn e_prefactor_for_n2() {
        // E with ρ = 0 and r = δ-like gives c * (−r_{jk} δ^l_i + r_{ik} δ^l_j); check c = 1/6.
        let z = Jet::zero(1, 0);
        let omega = JetArray::from_fn(&[4, 4], |_| z.clone());
        let rho = omega.clone();
        let ric = JetArray::from_fn(&[4, 4], |ix| z.lift(if ix[0] == ix[1] { 1.0 } else { 0.0 }));
        let e = e_component_jets(&omega, &rho, &ric);
        // l = i = 0, k = j = 1: −r_{11} c = −1/6
        assert!((e.get(&[0, 1, 0, 1]).value() + 1.0 / 6.0).abs() < 1e-16);
    }
}
