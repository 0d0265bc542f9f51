//! The induced space `P = M × ℝ_t × ℝ_s` of an exact symplectic chart and
//! its connection `∇^P`.
//!
//! Coordinates on `P` are `(x_0, …, x_{m-1}, t, s)` with `m = 2n`, so `t`
//! has index `m` and `s` index `m + 1`. The adapted frame uses the same
//! positions: `X̄_i = ∂_i − λ_i ∂_t` at `i < m`, `E = ∂_t` at `m`, `S = ∂_s`
//! at `m + 1`. The frame matrix `A` has the frame vectors as columns and
//! `B = A^{-1}` holds the dual coframe as rows.
//!
//! Every coefficient of `∇^P` in the frame depends on `x` only, so its
//! jets are computed on `M` and embedded into the coordinates of `P`.

use std::sync::Arc;

use ndarray::{Array1, Array2, Array3, Array4, Ix2, Ix3, Ix4};

use crate::error::{Error, Result};
use crate::field::{DerivedField, FieldRef, JetArray, JetField};
use crate::geometry::{
    self, curvature_jets, d_one_form_jets, d_two_form_jets, endo_from_bilinear_jets, lie_bracket_jets,
    lie_derivative_connection_jets, lie_derivative_two_form_jets, nabla_two_form_jets, ricci_jets, torsion_jets,
    Chart, ConnectionField, OneFormField, SymplecticVerdict, TwoFormField,
};
use crate::jet::Jet;
use crate::report::{sup, sweep, Check, Diagnostic, Record, Tolerances, VerificationReport};

/// `(M, ω = dλ, ∇)` on a single chart.
#[derive(Clone)]
pub struct ExactSymplecticSpec {
    pub name: String,
    pub chart: Chart,
    pub lambda: OneFormField,
    pub omega: TwoFormField,
    pub connection: ConnectionField,
}

/// Residuals of the defining conditions of an [`ExactSymplecticSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpecCheck {
    pub symplectic: SymplecticVerdict,
    pub max_torsion: f64,
    pub max_nabla_omega: f64,
    pub tol: f64,
}

impl SpecCheck {
    pub fn passes(&self) -> bool {
        self.symplectic.passes() && self.max_torsion <= self.tol && self.max_nabla_omega <= self.tol
    }
}

impl ExactSymplecticSpec {
    pub fn new(name: impl Into<String>, chart: Chart, lambda: OneFormField, connection: ConnectionField) -> Self {
        assert_eq!(chart.dim(), lambda.dim());
        assert_eq!(chart.dim(), connection.dim());
        let omega = lambda.exterior_derivative();
        ExactSymplecticSpec {
            name: name.into(),
            chart,
            lambda,
            omega,
            connection,
        }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn n(&self) -> usize {
        self.chart.n()
    }

    /// Symplectic form, torsion and `∇ω` at points of `M`.
    pub fn validate(&self, samples: &[Vec<f64>], tol: f64) -> Result<SpecCheck> {
        let symplectic = geometry::check_symplectic(&self.omega, samples, tol)?;
        let mut max_torsion = 0.0f64;
        let mut max_nabla_omega = 0.0f64;
        for p in samples {
            max_torsion = max_torsion.max(geometry::max_abs(&geometry::torsion(&self.connection, p)?));
            max_nabla_omega = max_nabla_omega.max(geometry::max_abs(&geometry::nabla_two_form(
                &self.connection,
                &self.omega,
                p,
            )?));
        }
        Ok(SpecCheck {
            symplectic,
            max_torsion,
            max_nabla_omega,
            tol,
        })
    }
}

fn dim2(a: JetArray) -> Array2<f64> {
    a.values().into_dimensionality::<Ix2>().expect("rank 2")
}

fn dim3(a: JetArray) -> Array3<f64> {
    a.values().into_dimensionality::<Ix3>().expect("rank 3")
}

fn dim4(a: JetArray) -> Array4<f64> {
    a.values().into_dimensionality::<Ix4>().expect("rank 4")
}

/// Pull a field on `M` back to `P` along the projection.
pub fn pull_back(field: FieldRef, p_dim: usize) -> FieldRef {
    let m = field.nvars();
    let map: Vec<usize> = (0..m).collect();
    let shape = field.shape().to_vec();
    let depth = field.depth();
    DerivedField::new("pull_back", p_dim, shape, depth, move |p, k| {
        Ok(field.eval(&p[..m], k)?.embed(p_dim, &map))
    })
    .into_ref()
}

/// Coordinate model of the induced symplectic manifold.
#[derive(Clone)]
pub struct InducedSpace {
    spec: ExactSymplecticSpec,
}

impl InducedSpace {
    /// Unchecked construction; see [`build_quadruple`].
    pub fn new(spec: ExactSymplecticSpec) -> InducedSpace {
        InducedSpace { spec }
    }

    pub fn spec(&self) -> &ExactSymplecticSpec {
        &self.spec
    }

    pub fn base_dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim() + 2
    }

    /// Index of `t` and of the frame field `E`.
    pub fn t_index(&self) -> usize {
        self.spec.dim()
    }

    /// Index of `s` and of the frame field `S`.
    pub fn s_index(&self) -> usize {
        self.spec.dim() + 1
    }

    /// Frame matrix `A` and its inverse `B` as jets on `M`.
    pub fn frame_jets(&self, x: &[f64], order: usize) -> Result<(JetArray, JetArray)> {
        let lam = self.spec.lambda.eval(x, order)?;
        Ok(frame_matrices(&lam))
    }

    pub fn frame(&self, point: &[f64]) -> Result<(Array2<f64>, Array2<f64>)> {
        let (a, b) = self.frame_jets(&point[..self.base_dim()], 0)?;
        Ok((dim2(a), dim2(b)))
    }

    /// `α = dt + λ` on `P`.
    pub fn alpha_field(&self) -> FieldRef {
        let lam = self.spec.lambda.field().clone();
        let m = self.base_dim();
        let pd = m + 2;
        let map: Vec<usize> = (0..m).collect();
        DerivedField::new("alpha", pd, vec![pd], 0, move |p, k| {
            let l = lam.eval(&p[..m], k)?.embed(pd, &map);
            let zero = Jet::zero(pd, k);
            Ok(JetArray::from_fn(&[pd], |ix| match ix[0] {
                i if i < m => l.get(&[i]).clone(),
                i if i == m => zero.lift(1.0),
                _ => zero.clone(),
            }))
        })
        .into_ref()
    }

    /// `μ = e^{2s}(ω + 2 ds ∧ α)` in coordinates.
    pub fn mu_field(&self) -> FieldRef {
        let lam = self.spec.lambda.field().clone();
        let omega = self.spec.omega.field().clone();
        let m = self.base_dim();
        let pd = m + 2;
        let (t, s) = (m, m + 1);
        let map: Vec<usize> = (0..m).collect();
        DerivedField::new("mu", pd, vec![pd, pd], 1, move |p, k| {
            let x = &p[..m];
            let l = lam.eval(x, k)?.embed(pd, &map);
            let w = omega.eval(x, k)?.embed(pd, &map);
            let e2s = Jet::variable(pd, k, s, p[s]).scale(2.0).exp();
            let two = e2s.scale(2.0);
            let zero = e2s.zeros_like();
            Ok(JetArray::from_fn(&[pd, pd], |ix| {
                let (a, b) = (ix[0], ix[1]);
                if a < m && b < m {
                    &e2s * w.get(&[a, b])
                } else if a == s && b == t {
                    two.clone()
                } else if a == t && b == s {
                    -&two
                } else if a == s && b < m {
                    &two * l.get(&[b])
                } else if b == s && a < m {
                    -&(&two * l.get(&[a]))
                } else {
                    zero.clone()
                }
            }))
        })
        .into_ref()
    }

    pub fn mu_at(&self, point: &[f64]) -> Result<Array2<f64>> {
        Ok(dim2(self.mu_field().eval(point, 0)?))
    }

    /// Frame vector `a` as a vector field on `P`.
    pub fn frame_field(&self, a: usize) -> FieldRef {
        let space = self.clone();
        let pd = self.dim();
        let m = self.base_dim();
        let map: Vec<usize> = (0..m).collect();
        DerivedField::new("frame_vector", pd, vec![pd], 0, move |p, k| {
            let (am, _) = space.frame_jets(&p[..m], k)?;
            let am = am.embed(pd, &map);
            Ok(JetArray::from_fn(&[pd], |ix| am.get(&[ix[0], a]).clone()))
        })
        .into_ref()
    }

    /// Residuals of the Reeb conditions, the defining conditions of the
    /// horizontal lifts, the bracket table and the structure of `μ`.
    pub fn structure_residuals(&self, point: &[f64]) -> Result<StructureResiduals> {
        let pd = self.dim();
        let m = self.base_dim();
        let (t, s) = (m, m + 1);
        let x = &point[..m];
        let alpha = self.alpha_field().eval(point, 1)?;
        let dalpha = d_one_form_jets(&alpha);
        let alpha0 = alpha.truncate(0).values();
        let reeb = (alpha0[t] - 1.0).abs().max(sup((0..pd).map(|j| dalpha.get(&[t, j]).value())));

        let (a, _) = self.frame(point)?;
        let mut horizontal = 0.0f64;
        for i in 0..m {
            horizontal = horizontal.max(a[[s, i]].abs());
            horizontal = horizontal.max((0..pd).map(|nu| alpha0[nu] * a[[nu, i]]).sum::<f64>().abs());
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                horizontal = horizontal.max((a[[j, i]] - want).abs());
            }
        }

        let frame: Vec<JetArray> = (0..pd)
            .map(|c| self.frame_field(c).eval(point, 1))
            .collect::<Result<_>>()?;
        let omega = dim2(self.spec.omega.eval(x, 0)?);
        let mut brackets = 0.0f64;
        for c in 0..pd {
            for d in 0..pd {
                let br = lie_bracket_jets(&frame[c], &frame[d]).values();
                let mut want = vec![0.0; pd];
                if c < m && d < m {
                    want[t] = -omega[[c, d]];
                }
                brackets = brackets.max(sup(br.iter().zip(&want).map(|(u, v)| u - v)));
            }
        }

        let mu = self.mu_field().eval(point, 1)?;
        let closed = sup(d_two_form_jets(&mu).values().iter().copied());
        let mu0 = dim2(mu.truncate(0));
        let e2s = (2.0 * point[s]).exp();
        let mut pairing = (mu0[[t, s]] + 2.0 * e2s).abs();
        // i(E)μ = −d(e^{2s}) and i(S)μ = 2e^{2s}α
        for nu in 0..pd {
            let d_e2s = if nu == s { 2.0 * e2s } else { 0.0 };
            pairing = pairing.max((mu0[[t, nu]] + d_e2s).abs());
            pairing = pairing.max((mu0[[s, nu]] - 2.0 * e2s * alpha0[nu]).abs());
        }
        Ok(StructureResiduals {
            reeb,
            horizontal,
            brackets,
            mu_closed: closed,
            mu_pairings: pairing,
        })
    }
}

/// Pointwise residuals of the structural identities of `P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureResiduals {
    pub reeb: f64,
    pub horizontal: f64,
    pub brackets: f64,
    pub mu_closed: f64,
    pub mu_pairings: f64,
}

impl StructureResiduals {
    fn to_vec(self) -> Vec<f64> {
        vec![self.reeb, self.horizontal, self.brackets, self.mu_closed, self.mu_pairings]
    }
}

fn structure_checks(tol: f64) -> Vec<Check> {
    vec![
        Check::new("reeb field", "α(Z) = 1 and i(Z)dα = 0", tol),
        Check::new("horizontal lifts", "p_*X̄ = X, α(X̄) = 0, ds(X̄) = 0", tol),
        Check::new("frame brackets", "[X̄, Ȳ] = −ω(X,Y)E, E and S commute with X̄", tol),
        Check::new("dμ", "μ is closed", tol),
        Check::new("μ pairings", "μ(E,S) = −2e^{2s}, i(E)μ = −d(e^{2s}), i(S)μ = 2e^{2s}α", tol),
    ]
}

/// `A` and `B = A^{-1}` from jets of `λ`.
fn frame_matrices(lam: &JetArray) -> (JetArray, JetArray) {
    let m = lam.shape()[0];
    let pd = m + 2;
    let (t, s) = (m, m + 1);
    let zero = lam.get(&[0]).zeros_like();
    let one = zero.lift(1.0);
    let a = JetArray::from_fn(&[pd, pd], |ix| {
        let (nu, c) = (ix[0], ix[1]);
        if nu == c {
            one.clone()
        } else if nu == t && c < m {
            -lam.get(&[c])
        } else {
            zero.clone()
        }
    });
    let b = JetArray::from_fn(&[pd, pd], |ix| {
        let (c, nu) = (ix[0], ix[1]);
        if nu == c {
            one.clone()
        } else if c == t && nu < m {
            lam.get(&[nu]).clone()
        } else {
            zero.clone()
        }
    });
    let _ = s;
    (a, b)
}

/// Build `P` and verify its structure at `samples` (points of `P`).
pub fn build_quadruple(spec: ExactSymplecticSpec, samples: &[Vec<f64>], tol: f64) -> Result<InducedSpace> {
    let space = InducedSpace::new(spec);
    let (records, diagnostics) = sweep(&structure_checks(tol), samples, |p| {
        Ok(space.structure_residuals(p)?.to_vec())
    });
    if let Some(r) = records.iter().find(|r| !r.pass) {
        let detail = diagnostics.first().map(|d| d.note.clone()).unwrap_or_default();
        return Err(Error::Verification(format!(
            "{}: residual {:e} exceeds {:e} {detail}",
            r.identity, r.residual, r.tol
        )));
    }
    Ok(space)
}

/// How a parameter set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterKind {
    RicciFlat,
    Custom,
}

/// The free data `(ŝ, U, f)` of the induced connection and the fields
/// derived from them, all on `M`.
#[derive(Clone)]
pub struct RicciFlatParameters {
    pub kind: ParameterKind,
    /// `ŝ_{ij}`.
    pub shat: FieldRef,
    /// `σ^k_j = π^{ki} ŝ_{ij}`.
    pub sigma: FieldRef,
    /// `(∇_i σ)^k_j`, shape `[i, k, j]`.
    pub nabla_sigma: FieldRef,
    /// `U^k`.
    pub u: FieldRef,
    /// `U̲_j = ω(U, ∂_j)`.
    pub u_flat: FieldRef,
    /// `(∇_i U)^k`, shape `[i, k]`.
    pub nabla_u: FieldRef,
    /// `f`, shape `[]`.
    pub f: FieldRef,
}

impl RicciFlatParameters {
    /// `ŝ = −r/(2(n+1))`, `U̲ = (2/(2n+1)) Tr[Y ↦ ∇_Y σ]`,
    /// `f = Tr ρ²/(2n(n+1)²) + Tr[X ↦ ∇_X U]/n`.
    pub fn ricci_flat(spec: &ExactSymplecticSpec) -> RicciFlatParameters {
        let m = spec.dim();
        let n = spec.n() as f64;
        let nabla = spec.connection.clone();
        let ric: FieldRef = nabla.ricci_field().into_ref();
        let pi: FieldRef = spec.omega.inverse_field().into_ref();

        let c_shat = -1.0 / (2.0 * (n + 1.0));
        let r = ric.clone();
        let shat = DerivedField::new("shat", m, vec![m, m], 1, move |p, k| {
            Ok(r.eval(p, k)?.map(|j| j.scale(c_shat)))
        })
        .into_ref();
        let sigma = sigma_field(&shat, &pi);
        let nabla_sigma = nabla.nabla_endo_field(sigma.clone()).into_ref();

        let c_u = 2.0 / (2.0 * n + 1.0);
        let ns = nabla_sigma.clone();
        let u_flat = DerivedField::new("u_flat", m, vec![m], 2, move |p, k| {
            let ns = ns.eval(p, k)?;
            Ok(JetArray::from_fn(&[m], |ix| {
                let mut acc = ns.get(&[0, 0, 0]).zeros_like();
                for i in 0..m {
                    acc += ns.get(&[i, i, ix[0]]);
                }
                acc.scale(c_u)
            }))
        })
        .into_ref();
        let (uf, pi_u) = (u_flat.clone(), pi.clone());
        let u = DerivedField::new("u", m, vec![m], 2, move |p, k| {
            let uf = uf.eval(p, k)?;
            let pi = pi_u.eval(p, k)?;
            Ok(JetArray::from_fn(&[m], |ix| {
                let mut acc = pi.get(&[0, 0]).zeros_like();
                for j in 0..m {
                    acc.mul_add_assign(uf.get(&[j]), pi.get(&[j, ix[0]]));
                }
                acc
            }))
        })
        .into_ref();
        let nabla_u = nabla.nabla_vector_field(u.clone()).into_ref();

        let c_rho = 1.0 / (2.0 * n * (n + 1.0) * (n + 1.0));
        let (r, pi_f, nu) = (ric, pi, nabla_u.clone());
        let f = DerivedField::new("f", m, vec![], 3, move |p, k| {
            let rho = endo_from_bilinear_jets(&pi_f.eval(p, k)?, &r.eval(p, k)?);
            let nu = nu.eval(p, k)?;
            let mut tr_rho2 = rho.get(&[0, 0]).zeros_like();
            let mut tr_nu = tr_rho2.clone();
            for a in 0..m {
                tr_nu += nu.get(&[a, a]);
                for b in 0..m {
                    tr_rho2.mul_add_assign(rho.get(&[a, b]), rho.get(&[b, a]));
                }
            }
            let mut out = tr_rho2.scale(c_rho);
            out.add_scaled(&tr_nu, 1.0 / n);
            Ok(JetArray::new(vec![], vec![out]))
        })
        .into_ref();

        RicciFlatParameters {
            kind: ParameterKind::RicciFlat,
            shat,
            sigma,
            nabla_sigma,
            u,
            u_flat,
            nabla_u,
            f,
        }
    }

    /// Arbitrary `(ŝ, U, f)`: shapes `[m, m]` (symmetric), `[m]`, `[]`.
    pub fn custom(spec: &ExactSymplecticSpec, shat: FieldRef, u: FieldRef, f: FieldRef) -> Result<RicciFlatParameters> {
        let m = spec.dim();
        if shat.shape() != [m, m] || u.shape() != [m] || !f.shape().is_empty() {
            return Err(Error::invalid("parameter shapes must be [m, m], [m] and []"));
        }
        if shat.nvars() != m || u.nvars() != m || f.nvars() != m {
            return Err(Error::invalid("parameters must be fields on M"));
        }
        let nabla = spec.connection.clone();
        let pi: FieldRef = spec.omega.inverse_field().into_ref();
        let sigma = sigma_field(&shat, &pi);
        let nabla_sigma = nabla.nabla_endo_field(sigma.clone()).into_ref();
        let (uu, om) = (u.clone(), spec.omega.field().clone());
        let u_flat = DerivedField::new("u_flat", m, vec![m], u.depth(), move |p, k| {
            let u = uu.eval(p, k)?;
            let w = om.eval(p, k)?;
            Ok(JetArray::from_fn(&[m], |ix| {
                let mut acc = w.get(&[0, 0]).zeros_like();
                for a in 0..m {
                    acc.mul_add_assign(u.get(&[a]), w.get(&[a, ix[0]]));
                }
                acc
            }))
        })
        .into_ref();
        let nabla_u = nabla.nabla_vector_field(u.clone()).into_ref();
        Ok(RicciFlatParameters {
            kind: ParameterKind::Custom,
            shat,
            sigma,
            nabla_sigma,
            u,
            u_flat,
            nabla_u,
            f,
        })
    }
}

fn sigma_field(shat: &FieldRef, pi: &FieldRef) -> FieldRef {
    let (sh, pi) = (shat.clone(), pi.clone());
    let m = shat.nvars();
    DerivedField::new("sigma", m, vec![m, m], shat.depth(), move |p, k| {
        Ok(endo_from_bilinear_jets(&pi.eval(p, k)?, &sh.eval(p, k)?))
    })
    .into_ref()
}

pub fn ricci_flat_params(spec: &ExactSymplecticSpec) -> RicciFlatParameters {
    RicciFlatParameters::ricci_flat(spec)
}

/// Point values of the parameters and the curvature of `∇` on `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterValues {
    pub omega: Array2<f64>,
    pub shat: Array2<f64>,
    pub sigma: Array2<f64>,
    pub u: Array1<f64>,
    pub f: f64,
    pub df: Array1<f64>,
    pub nabla_sigma: Array3<f64>,
    pub nabla_u: Array2<f64>,
    pub curvature: Array4<f64>,
}

impl ParameterValues {
    /// `D(Y,Y′) = (∇_Y σ)Y′ + ½ω(Y′,U)Y − ½ω(Y,Y′)U`.
    pub fn d_sigma_u(&self, y: &Array1<f64>, yp: &Array1<f64>) -> Array1<f64> {
        let m = y.len();
        let mut out = Array1::zeros(m);
        for i in 0..m {
            for k in 0..m {
                for j in 0..m {
                    out[k] += y[i] * self.nabla_sigma[[i, k, j]] * yp[j];
                }
            }
        }
        let w_ypu = yp.dot(&self.omega.dot(&self.u));
        let w_yyp = y.dot(&self.omega.dot(yp));
        out + &(y * (0.5 * w_ypu)) - &(&self.u * (0.5 * w_yyp))
    }

    /// `W(X) = ½fX − ∇_X U − 2σ²X`.
    pub fn w_map(&self, x: &Array1<f64>) -> Array1<f64> {
        let sigma2 = self.sigma.dot(&self.sigma);
        x * (0.5 * self.f) - &x.dot(&self.nabla_u) - &(sigma2.dot(x) * 2.0)
    }

    fn omega(&self, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        a.dot(&self.omega.dot(b))
    }
}

/// `∇^P` in the adapted frame.
#[derive(Clone)]
pub struct FrameConnection {
    space: InducedSpace,
    params: RicciFlatParameters,
}

pub fn induced_connection(space: &InducedSpace, params: &RicciFlatParameters) -> FrameConnection {
    FrameConnection {
        space: space.clone(),
        params: params.clone(),
    }
}

impl FrameConnection {
    pub fn space(&self) -> &InducedSpace {
        &self.space
    }

    pub fn params(&self) -> &RicciFlatParameters {
        &self.params
    }

    /// `Γ̃^c_{ab}` with `∇^P_{e_a} e_b = Γ̃^c_{ab} e_c`, shape `[c, a, b]`, as jets on `M`.
    pub fn frame_coefficients(&self, x: &[f64], order: usize) -> Result<JetArray> {
        let spec = self.space.spec();
        let m = spec.dim();
        let pd = m + 2;
        let (e, s) = (m, m + 1);
        let g = spec.connection.eval(x, order)?;
        let w = spec.omega.eval(x, order)?;
        let shat = self.params.shat.eval(x, order)?;
        let sigma = self.params.sigma.eval(x, order)?;
        let u = self.params.u.eval(x, order)?;
        let f = self.params.f.eval(x, order)?;
        let mut out = JetArray::zeros(&[pd, pd, pd], m, order);
        let one = Jet::constant(m, order, 1.0);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.set(&[k, i, j], g.get(&[k, i, j]).clone());
                }
                out.set(&[e, i, j], w.get(&[i, j]).scale(-0.5));
                out.set(&[s, i, j], -shat.get(&[i, j]));
            }
            for k in 0..m {
                let two_sigma = sigma.get(&[k, i]).scale(2.0);
                out.set(&[k, e, i], two_sigma.clone());
                out.set(&[k, i, e], two_sigma);
            }
            let mut wu = one.zeros_like();
            for k in 0..m {
                wu.mul_add_assign(w.get(&[i, k]), u.get(&[k]));
            }
            out.set(&[s, e, i], wu.clone());
            out.set(&[s, i, e], wu);
            out.set(&[i, s, i], one.clone());
            out.set(&[i, i, s], one.clone());
        }
        out.set(&[s, e, e], f.get(&[]).clone());
        for k in 0..m {
            out.set(&[k, e, e], u.get(&[k]).scale(-2.0));
        }
        out.set(&[e, e, s], one.clone());
        out.set(&[e, s, e], one.clone());
        out.set(&[s, s, s], one);
        Ok(out)
    }

    /// Coordinate Christoffel symbols `Γ^ν_{μρ}` of `∇^P` as jets on `M`:
    /// `Γ^ν_{μρ} = B^a_μ B^b_ρ (Γ̃^c_{ab} A^ν_c − A^κ_a ∂_κ A^ν_b)`.
    pub fn coordinate_christoffel_base(&self, x: &[f64], order: usize) -> Result<JetArray> {
        let m = self.space.base_dim();
        let pd = m + 2;
        let gt = self.frame_coefficients(x, order)?;
        let (a1, _) = self.space.frame_jets(x, order + 1)?;
        let (a, b) = self.space.frame_jets(x, order)?;
        let da: Vec<JetArray> = (0..m).map(|k| a1.derivative(k)).collect();
        let zero = Jet::zero(m, order);
        let mut inner = Vec::with_capacity(pd * pd * pd);
        for nu in 0..pd {
            for fa in 0..pd {
                for fb in 0..pd {
                    let mut acc = zero.clone();
                    for c in 0..pd {
                        acc.mul_add_assign(gt.get(&[c, fa, fb]), a.get(&[nu, c]));
                    }
                    for (k, dak) in da.iter().enumerate() {
                        acc.mul_sub_assign(a.get(&[k, fa]), dak.get(&[nu, fb]));
                    }
                    inner.push(acc);
                }
            }
        }
        let inner = JetArray::new(vec![pd, pd, pd], inner);
        let support: Vec<Vec<usize>> = (0..pd)
            .map(|mu| (0..pd).filter(|&fa| b.get(&[fa, mu]).max_abs() != 0.0).collect())
            .collect();
        Ok(JetArray::from_fn(&[pd, pd, pd], |ix| {
            let (nu, mu, rho) = (ix[0], ix[1], ix[2]);
            let mut acc = zero.clone();
            for &fa in &support[mu] {
                for &fb in &support[rho] {
                    let bb = b.get(&[fa, mu]) * b.get(&[fb, rho]);
                    acc.mul_add_assign(&bb, inner.get(&[nu, fa, fb]));
                }
            }
            acc
        }))
    }

    /// The coordinate connection on `P`.
    pub fn coordinate_connection(&self) -> ConnectionField {
        let fc = self.clone();
        let m = self.space.base_dim();
        let pd = m + 2;
        let map: Vec<usize> = (0..m).collect();
        let depth = self.params.f.depth();
        let field = DerivedField::new("induced_christoffel", pd, vec![pd, pd, pd], depth, move |p, k| {
            Ok(fc.coordinate_christoffel_base(&p[..m], k)?.embed(pd, &map))
        });
        ConnectionField::from_field(field.into_ref())
    }

    pub fn parameter_values(&self, x: &[f64]) -> Result<ParameterValues> {
        let spec = self.space.spec();
        let p = &self.params;
        let f1 = p.f.eval(x, 1)?;
        let f = f1.get(&[]);
        Ok(ParameterValues {
            omega: dim2(spec.omega.eval(x, 0)?),
            shat: dim2(p.shat.eval(x, 0)?),
            sigma: dim2(p.sigma.eval(x, 0)?),
            u: p.u.eval(x, 0)?.values().into_dimensionality().expect("rank 1"),
            f: f.value(),
            df: Array1::from(f.gradient()),
            nabla_sigma: dim3(p.nabla_sigma.eval(x, 0)?),
            nabla_u: dim2(p.nabla_u.eval(x, 0)?),
            curvature: geometry::curvature(&spec.connection, x)?,
        })
    }

    pub fn d_sigma_u(&self, x: &[f64], y: &[f64], yp: &[f64]) -> Result<Array1<f64>> {
        let v = self.parameter_values(x)?;
        Ok(v.d_sigma_u(&Array1::from(y.to_vec()), &Array1::from(yp.to_vec())))
    }

    /// Closed-form frame components `R[d, c, a, b]` of `R^P(e_a, e_b) e_c`.
    /// The `R(X̄, E)E` block uses the grouping `2W(X)`.
    pub fn curvature_formula(&self, x: &[f64]) -> Result<Array4<f64>> {
        let v = self.parameter_values(x)?;
        Ok(closed_form_curvature(&v, XeeReading::Grouped))
    }

    /// Frame components of the curvature of the coordinate connection.
    pub fn curvature_direct_frame(&self, point: &[f64]) -> Result<Array4<f64>> {
        let ccp = self.coordinate_connection();
        let r = dim4(curvature_jets(&ccp.eval(point, 1)?));
        let (a, b) = self.space.frame(point)?;
        Ok(push_to_frame(&r, &a, &b))
    }
}

pub fn frame_to_coordinate(fc: &FrameConnection, point: &[f64]) -> Result<Array3<f64>> {
    Ok(dim3(fc.coordinate_connection().eval(point, 0)?))
}

/// The two readings of the printed `R(X̄, E)E` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XeeReading {
    /// `2(½fX − ∇_X U − 2σ²X)`.
    Grouped,
    /// `fX − ∇_X U − 2σ²X`.
    Literal,
}

/// `R_f[d, c, a, b] = B^d_l R^l_{kij} A^k_c A^i_a A^j_b`.
pub fn push_to_frame(r: &Array4<f64>, a: &Array2<f64>, b: &Array2<f64>) -> Array4<f64> {
    let n = a.nrows();
    let mut t1 = Array4::<f64>::zeros((n, n, n, n));
    for d in 0..n {
        for l in 0..n {
            if b[[d, l]] == 0.0 {
                continue;
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        t1[[d, k, i, j]] += b[[d, l]] * r[[l, k, i, j]];
                    }
                }
            }
        }
    }
    let mut out = Array4::<f64>::zeros((n, n, n, n));
    for d in 0..n {
        for c in 0..n {
            for fa in 0..n {
                for fb in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        if a[[k, c]] == 0.0 {
                            continue;
                        }
                        for i in 0..n {
                            if a[[i, fa]] == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                acc += t1[[d, k, i, j]] * a[[k, c]] * a[[i, fa]] * a[[j, fb]];
                            }
                        }
                    }
                    out[[d, c, fa, fb]] = acc;
                }
            }
        }
    }
    out
}

fn unit(m: usize, i: usize) -> Array1<f64> {
    let mut v = Array1::zeros(m);
    v[i] = 1.0;
    v
}

/// Closed-form curvature of `∇^P` in the frame from parameter values.
pub fn closed_form_curvature(v: &ParameterValues, reading: XeeReading) -> Array4<f64> {
    let m = v.omega.nrows();
    let pd = m + 2;
    let (e, s) = (m, m + 1);
    let mut out = Array4::<f64>::zeros((pd, pd, pd, pd));
    let units: Vec<Array1<f64>> = (0..m).map(|i| unit(m, i)).collect();
    let dd: Vec<Vec<Array1<f64>>> = units
        .iter()
        .map(|y| units.iter().map(|yp| v.d_sigma_u(y, yp)).collect())
        .collect();
    let ww: Vec<Array1<f64>> = units.iter().map(|x| v.w_map(x)).collect();
    let sig = &v.sigma;
    let sh = &v.shat;
    let om = &v.omega;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let mut h = v.curvature[[l, k, i, j]] + 2.0 * om[[i, j]] * sig[[l, k]] - om[[j, k]] * sig[[l, i]]
                        + om[[i, k]] * sig[[l, j]];
                    if l == i {
                        h -= sh[[j, k]];
                    }
                    if l == j {
                        h += sh[[i, k]];
                    }
                    out[[l, k, i, j]] = h;
                }
                out[[s, k, i, j]] = v.omega(&units[i], &dd[j][k]) - v.omega(&units[j], &dd[i][k]);
            }
            // R(X̄,Ȳ)E
            for l in 0..m {
                out[[l, e, i, j]] = 2.0 * dd[i][j][l] - 2.0 * dd[j][i][l];
            }
            out[[s, e, i, j]] = v.omega(&units[i], &ww[j]) - v.omega(&units[j], &ww[i]);
            // R(X̄,E)Ȳ
            for l in 0..m {
                out[[l, j, i, e]] = 2.0 * dd[i][j][l];
                out[[l, j, e, i]] = -2.0 * dd[i][j][l];
            }
            let sc = -v.omega(&units[j], &ww[i]);
            out[[s, j, i, e]] = sc;
            out[[s, j, e, i]] = -sc;
        }
        // R(X̄,E)E
        let horizontal = match reading {
            XeeReading::Grouped => &ww[i] * 2.0,
            XeeReading::Literal => &ww[i] + &(&units[i] * (0.5 * v.f)),
        };
        for l in 0..m {
            out[[l, e, i, e]] = horizontal[l];
            out[[l, e, e, i]] = -horizontal[l];
        }
        let sc = v.df[i] + 4.0 * units[i].dot(&sh.dot(&v.u));
        out[[s, e, i, e]] = sc;
        out[[s, e, e, i]] = -sc;
    }
    out
}

/// Frame-index blocks of `R^P(e_a, e_b)e_c` by the kind of `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureBlock {
    /// `(X̄, Ȳ)Z̄`.
    Horizontal,
    /// `(X̄, Ȳ)E`.
    HorizontalE,
    /// `(X̄, E)Ȳ` and `(E, X̄)Ȳ`.
    MixedHorizontal,
    /// `(X̄, E)E` and `(E, X̄)E`.
    MixedE,
    /// Any slot `S`, or `(E, E)`.
    Zero,
}

pub fn curvature_block(m: usize, c: usize, a: usize, b: usize) -> CurvatureBlock {
    let (e, s) = (m, m + 1);
    if a == s || b == s || c == s || (a == e && b == e) {
        CurvatureBlock::Zero
    } else if a < m && b < m {
        if c < m {
            CurvatureBlock::Horizontal
        } else {
            CurvatureBlock::HorizontalE
        }
    } else if c < m {
        CurvatureBlock::MixedHorizontal
    } else {
        CurvatureBlock::MixedE
    }
}

/// Max residual per block between two frame curvature arrays.
pub fn block_residuals(direct: &Array4<f64>, formula: &Array4<f64>) -> [f64; 5] {
    let pd = direct.shape()[0];
    let m = pd - 2;
    let mut out = [0.0f64; 5];
    for ((idx, x), y) in direct.indexed_iter().zip(formula.iter()) {
        let (_, c, a, b) = idx;
        let slot = match curvature_block(m, c, a, b) {
            CurvatureBlock::Horizontal => 0,
            CurvatureBlock::HorizontalE => 1,
            CurvatureBlock::MixedHorizontal => 2,
            CurvatureBlock::MixedE => 3,
            CurvatureBlock::Zero => 4,
        };
        out[slot] = out[slot].max((x - y).abs());
    }
    out
}

/// Coordinate Ricci tensor of the connection on `P`.
pub fn ricci_p(ccp: &ConnectionField, point: &[f64]) -> Result<Array2<f64>> {
    geometry::ricci(ccp, point)
}

/// Frame components `r^P(e_a, e_b) = A^μ_a r_{μν} A^ν_b`.
pub fn ricci_p_frame(fc: &FrameConnection, point: &[f64]) -> Result<Array2<f64>> {
    let r = ricci_p(&fc.coordinate_connection(), point)?;
    let (a, _) = fc.space().frame(point)?;
    Ok(a.t().dot(&r).dot(&a))
}

/// Predicted frame Ricci tensor from the Ricci table.
pub fn ricci_table(v: &ParameterValues, ricci_m: &Array2<f64>) -> Array2<f64> {
    let m = v.omega.nrows();
    let n = (m / 2) as f64;
    let pd = m + 2;
    let e = m;
    let mut out = Array2::zeros((pd, pd));
    for i in 0..m {
        for j in 0..m {
            out[[i, j]] = ricci_m[[i, j]] + 2.0 * (n + 1.0) * v.shat[[i, j]];
        }
        let wu: f64 = (0..m).map(|k| v.omega[[i, k]] * v.u[k]).sum();
        let tr_ns: f64 = (0..m).map(|j| v.nabla_sigma[[j, j, i]]).sum();
        let xe = -(2.0 * n + 1.0) * wu - 2.0 * tr_ns;
        out[[i, e]] = xe;
        out[[e, i]] = xe;
    }
    let sigma2 = v.sigma.dot(&v.sigma);
    let tr_nu: f64 = (0..m).map(|i| v.nabla_u[[i, i]]).sum();
    out[[e, e]] = 4.0 * sigma2.diag().sum() - 2.0 * n * v.f + 2.0 * tr_nu;
    out
}

/// `(L_V ∇)^ν_{μρ}` at a point of `P`.
pub fn lie_derivative_connection(v: &dyn JetField, ccp: &ConnectionField, point: &[f64]) -> Result<Array3<f64>> {
    Ok(dim3(lie_derivative_connection_jets(&v.eval(point, 2)?, &ccp.eval(point, 1)?)))
}

/// `(L_V μ)` at a point of `P`.
pub fn lie_derivative_two_form(v: &dyn JetField, form: &dyn JetField, point: &[f64]) -> Result<Array2<f64>> {
    Ok(dim2(lie_derivative_two_form_jets(&v.eval(point, 1)?, &form.eval(point, 1)?)))
}

/// Constant coordinate vector field `∂_index` on a chart of dimension `dim`.
pub fn coordinate_vector(dim: usize, index: usize) -> FieldRef {
    DerivedField::new("coordinate_vector", dim, vec![dim], 0, move |p, k| {
        let zero = Jet::zero(p.len(), k);
        Ok(JetArray::from_fn(&[dim], |ix| zero.lift(if ix[0] == index { 1.0 } else { 0.0 })))
    })
    .into_ref()
}

const ANCHOR_RICCI_FLAT: &str = "induced connection is Ricci-flat for the displayed ŝ, U, f";

/// Verify the induction theorem at `samples` (points of `P`).
pub fn verify_theorem(
    spec: &ExactSymplecticSpec,
    params: &RicciFlatParameters,
    samples: &[Vec<f64>],
    seed: u64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let space = InducedSpace::new(spec.clone());
    let fc = induced_connection(&space, params);
    let mut report = VerificationReport::new(spec.name.clone(), seed);
    let m = spec.dim();
    let pd = m + 2;
    let (t, s) = (m, m + 1);

    let (records, diagnostics) = sweep(&structure_checks(tol.structure), samples, |p| {
        Ok(space.structure_residuals(p)?.to_vec())
    });
    records.into_iter().for_each(|r| report.push(r));
    report.diagnostics.extend(diagnostics);

    let base: Vec<Vec<f64>> = samples.iter().map(|p| p[..m].to_vec()).collect();
    let ricci_type = geometry::is_ricci_type(&spec.connection, &spec.omega, &base, tol.flat)?;
    report.diagnostics.push(Diagnostic::new(
        "ricci type on M (max |W|)",
        ricci_type.max_w,
        if ricci_type.pass {
            "W vanishes: flatness of the induced connection is asserted"
        } else {
            "W does not vanish: flatness is not claimed"
        },
    ));

    let mut checks = vec![
        Check::new("torsion of induced connection", "induced connection is torsion-free", tol.torsion),
        Check::new("∇μ for induced connection", "one checks readily that ∇^P μ = 0", tol.nabla_mu),
        Check::new("ricci of induced connection", ANCHOR_RICCI_FLAT, tol.ricci),
        Check::new("L_E of induced connection", "E is affine for the induced connection", tol.lie_connection),
        Check::new("L_S of induced connection", "S is affine for the induced connection", tol.lie_connection),
        Check::new("L_E μ", "E is symplectic", tol.lie_mu),
        Check::new("L_S μ − 2μ", "S is conformal with L_S μ = 2μ", tol.lie_mu),
        Check::new("curvature block (X̄,Ȳ)Z̄", "closed-form horizontal curvature block", tol.oracle),
        Check::new("curvature block (X̄,Ȳ)E", "closed-form curvature block R(X̄,Ȳ)E", tol.oracle),
        Check::new("curvature block (X̄,E)Ȳ", "closed-form curvature block R(X̄,E)Ȳ", tol.oracle),
        Check::new("curvature zero blocks", "R(·,S)· = 0, R(X̄,Ȳ)S = 0, R(X̄,E)S = 0", tol.oracle),
    ];
    if ricci_type.pass {
        checks.push(Check::new(
            "flatness of induced connection",
            "Ricci-type connection induces a flat connection",
            tol.flat,
        ));
    }
    let ccp = fc.coordinate_connection();
    let mu = space.mu_field();
    let e_field = coordinate_vector(pd, t);
    let s_field = coordinate_vector(pd, s);
    let xee = std::sync::Mutex::new([0.0f64; 2]);
    let (records, diagnostics) = sweep(&checks, samples, |p| {
        let x = &p[..m];
        let g1 = ccp.eval(p, 1)?;
        let g0 = g1.truncate(0);
        let mu1 = mu.eval(p, 1)?;
        let mu0 = dim2(mu1.truncate(0));
        let curv = curvature_jets(&g1);
        let ric = ricci_jets(&curv);
        let e2 = e_field.eval(p, 2)?;
        let s2 = s_field.eval(p, 2)?;
        let le = lie_derivative_connection_jets(&e2, &g1);
        let ls = lie_derivative_connection_jets(&s2, &g1);
        let lmu_e = lie_derivative_two_form_jets(&e2.truncate(1), &mu1);
        let lmu_s = dim2(lie_derivative_two_form_jets(&s2.truncate(1), &mu1)) - &(&mu0 * 2.0);

        let r = dim4(curv);
        let (a, b) = space.frame(p)?;
        let direct = push_to_frame(&r, &a, &b);
        let v = fc.parameter_values(x)?;
        let blocks = block_residuals(&direct, &closed_form_curvature(&v, XeeReading::Grouped));
        let literal = block_residuals(&direct, &closed_form_curvature(&v, XeeReading::Literal));
        {
            let mut guard = xee.lock().expect("diagnostic lock");
            guard[0] = guard[0].max(blocks[3]);
            guard[1] = guard[1].max(literal[3]);
        }
        let mut out = vec![
            sup(torsion_jets(&g0).values().iter().copied()),
            sup(nabla_two_form_jets(&g0, &mu1).values().iter().copied()),
            sup(ric.values().iter().copied()),
            sup(le.values().iter().copied()),
            sup(ls.values().iter().copied()),
            sup(lmu_e.values().iter().copied()),
            sup(lmu_s.iter().copied()),
            blocks[0],
            blocks[1],
            blocks[2],
            blocks[4],
        ];
        if ricci_type.pass {
            out.push(sup(r.iter().copied()));
        }
        Ok(out)
    });
    records.into_iter().for_each(|r| report.push(r));
    report.diagnostics.extend(diagnostics);
    let xee = xee.into_inner().expect("diagnostic lock");
    report.diagnostics.push(Diagnostic::new(
        "curvature block (X̄,E)E, grouped reading 2(½fX − ∇_X U − 2σ²X)",
        xee[0],
        "max deviation from the direct curvature",
    ));
    report.diagnostics.push(Diagnostic::new(
        "curvature block (X̄,E)E, literal reading fX − ∇_X U − 2σ²X",
        xee[1],
        "max deviation from the direct curvature",
    ));
    Ok(report)
}

/// Ricci table of the induced connection for arbitrary parameters.
pub fn verify_ricci_table(
    spec: &ExactSymplecticSpec,
    params: &RicciFlatParameters,
    samples: &[Vec<f64>],
    seed: u64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let space = InducedSpace::new(spec.clone());
    let fc = induced_connection(&space, params);
    let m = spec.dim();
    let mut report = VerificationReport::new(spec.name.clone(), seed);
    let checks = [
        Check::new(
            "ricci table (X̄,Ȳ)",
            "r^P(X̄,Ȳ) = r(X,Y) + 2(n+1)ŝ(X,Y)",
            tol.linearity,
        ),
        Check::new("ricci table (X̄,E)", "r^P(X̄,E) row of the Ricci table", tol.linearity),
        Check::new(
            "ricci table (E,E)",
            "r^P(E,E) = 4Tr σ² − 2nf + 2Tr[X ↦ ∇_X U]",
            tol.linearity,
        ),
        Check::new("ricci table (·,S)", "r^P(·,S) = 0", tol.linearity),
    ];
    let ccp = fc.coordinate_connection();
    let (records, diagnostics) = sweep(&checks, samples, |p| {
        let x = &p[..m];
        let r = dim2(ricci_jets(&curvature_jets(&ccp.eval(p, 1)?)));
        let (a, _) = space.frame(p)?;
        let rf = a.t().dot(&r).dot(&a);
        let v = fc.parameter_values(x)?;
        let rm = geometry::ricci(&spec.connection, x)?;
        let want = ricci_table(&v, &rm);
        let mut res = [0.0f64; 4];
        for ((i, j), x) in rf.indexed_iter() {
            let slot = if i == m + 1 || j == m + 1 {
                3
            } else if i < m && j < m {
                0
            } else if i == m && j == m {
                2
            } else {
                1
            };
            res[slot] = res[slot].max((x - want[[i, j]]).abs());
        }
        Ok(res.to_vec())
    });
    records.into_iter().for_each(|r| report.push(r));
    report.diagnostics.extend(diagnostics);
    Ok(report)
}

/// Record for a parameter check comparing two fields on `M`.
pub fn parameter_record(
    identity: &str,
    anchor: &str,
    samples: &[Vec<f64>],
    tol: f64,
    f: impl Fn(&[f64]) -> Result<f64> + Sync,
) -> (Record, Vec<Diagnostic>) {
    let (mut rec, diag) = sweep(&[Check::new(identity, anchor, tol)], samples, |p| Ok(vec![f(p)?]));
    (rec.remove(0), diag)
}

/// Shared handle used where several reports reuse one space.
pub type SharedSpace = Arc<InducedSpace>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn pt() -> Vec<f64> {
        vec![0.3, -0.7, 0.45, 0.2, 0.1, 0.25]
    }

    #[test]
    fn flat4_alpha_and_bracket() {
        let space = InducedSpace::new(fixtures::flat4());
        let alpha = space.alpha_field().values(&pt()).unwrap();
        assert_eq!(alpha[4], 1.0);
        let r = space.structure_residuals(&pt()).unwrap();
        assert!(r.brackets <= 1e-14 && r.reeb == 0.0 && r.horizontal == 0.0);
        // [X̄_1, X̄_3] = −ω_13 E = +E
        let x1 = space.frame_field(0).eval(&pt(), 1).unwrap();
        let x3 = space.frame_field(2).eval(&pt(), 1).unwrap();
        let br = lie_bracket_jets(&x1, &x3).values();
        assert_eq!(br[4], 1.0);
    }

    #[test]
    fn mu_pairing_at_s() {
        let space = InducedSpace::new(fixtures::flat4());
        let mut p = pt();
        p[5] = 0.3;
        let mu = space.mu_at(&p).unwrap();
        assert!((mu[[4, 5]] + 2.0 * 0.6f64.exp()).abs() < 1e-14);
        assert!((mu[[5, 4]] - 2.0 * 0.6f64.exp()).abs() < 1e-14);
        p[5] = 0.0;
        let mu = space.mu_at(&p).unwrap();
        assert_eq!(mu[[0, 2]], -1.0);
    }

    #[test]
    fn flat_params_vanish() {
        let spec = fixtures::flat4();
        let params = ricci_flat_params(&spec);
        let x = [0.3, -0.7, 0.45, 0.2];
        for f in [&params.shat, &params.u, &params.f, &params.nabla_sigma, &params.nabla_u] {
            assert!(f.values(&x).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn flat_frame_table() {
        let spec = fixtures::flat4();
        let space = InducedSpace::new(spec.clone());
        let fc = induced_connection(&space, &ricci_flat_params(&spec));
        let g = fc.frame_coefficients(&[0.3, -0.7, 0.45, 0.2], 0).unwrap().values();
        assert_eq!(g[[5, 5, 5]], 1.0);
        assert_eq!(g[[4, 0, 2]], 0.5);
    }

    #[test]
    fn coordinate_connection_identity_at_zero_lambda() {
        let spec = fixtures::flat4();
        let space = InducedSpace::new(spec.clone());
        let fc = induced_connection(&space, &ricci_flat_params(&spec));
        let p = [0.3, -0.7, 0.0, 0.0, 0.1, 0.2];
        let frame = fc.frame_coefficients(&p[..4], 0).unwrap().values();
        let coord = frame_to_coordinate(&fc, &p).unwrap();
        // A = identity there, but ∂A ≠ 0 adds −A^κ_a ∂_κ A^ν_b
        for nu in 0..6 {
            for mu in 0..6 {
                for rho in 0..6 {
                    let mut want = frame[[nu, mu, rho]];
                    if nu == 4 && mu < 4 && rho < 2 && mu == rho + 2 {
                        want += 1.0;
                    }
                    assert!((coord[[nu, mu, rho]] - want).abs() < 1e-14, "{nu}{mu}{rho}");
                }
            }
        }
    }

    #[test]
    fn block_classification() {
        assert_eq!(curvature_block(4, 0, 1, 2), CurvatureBlock::Horizontal);
        assert_eq!(curvature_block(4, 4, 1, 2), CurvatureBlock::HorizontalE);
        assert_eq!(curvature_block(4, 1, 4, 2), CurvatureBlock::MixedHorizontal);
        assert_eq!(curvature_block(4, 4, 4, 2), CurvatureBlock::MixedE);
        assert_eq!(curvature_block(4, 5, 1, 2), CurvatureBlock::Zero);
        assert_eq!(curvature_block(4, 0, 4, 4), CurvatureBlock::Zero);
    }
}
