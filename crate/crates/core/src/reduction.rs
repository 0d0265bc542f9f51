//! Reduction of the induced space along `E` at the level
//! `Σ = {μ(S, E) = 1}`, recovering `(M, ½ω, ∇)`.
//!
//! In the induced model `Σ = {s = s₀}` and the quotient map is the
//! projection to `x`. The horizontal distribution `H = ⟨E, S⟩^{⊥μ}` is
//! solved from the two orthogonality conditions rather than assumed.

use crate::error::{Error, Result};
use crate::field::{DerivedField, JetArray};
use crate::geometry::{d_two_form_jets, nabla_two_form_jets, torsion_jets, ConnectionField, TwoFormField};
use crate::induction::{induced_connection, ExactSymplecticSpec, InducedSpace, RicciFlatParameters};
use crate::jet::Jet;
use crate::report::{sup, sweep, Check, Record, ScaleEntry, Tolerances, VerificationReport};

/// The level `s₀` of `Σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaLevel {
    pub s0: f64,
    /// `μ(S, E)` at `s₀`.
    pub pairing: f64,
    pub iterations: usize,
}

const NEWTON_MAX_ITER: usize = 60;

/// Solve `μ(S, E) = 1` in `s` by Newton's method at `x = 0, t = 0`.
pub fn locate_sigma(space: &InducedSpace) -> Result<SigmaLevel> {
    let pd = space.dim();
    let (t, s) = (space.t_index(), space.s_index());
    let mu = space.mu_field();
    let mut p = vec![0.0; pd];
    for iterations in 1..=NEWTON_MAX_ITER {
        let m1 = mu.eval(&p, 1)?;
        let g = m1.get(&[s, t]);
        let value = g.value() - 1.0;
        let slope = g.gradient()[s];
        if slope == 0.0 {
            return Err(Error::singular("μ(S,E) slope", &p));
        }
        let step = value / slope;
        p[s] -= step;
        if step.abs() <= 1e-16 * p[s].abs().max(1.0) {
            let pairing = mu.eval(&p, 0)?.get(&[s, t]).value();
            return Ok(SigmaLevel {
                s0: p[s],
                pairing,
                iterations,
            });
        }
    }
    Err(Error::Verification("Newton iteration for s₀ did not converge".into()))
}

/// Reduction data for a fixed induced connection.
#[derive(Clone)]
pub struct Reduction {
    space: InducedSpace,
    gamma_p: ConnectionField,
    level: SigmaLevel,
}

/// Jets on `P` of `∇^Σ`, `∇^M` and `ω_red` ingredients at one point of `Σ`.
struct Local {
    /// `∇^M` coefficients before projection, shape `[ν, i, j]`.
    reduced: JetArray,
    /// `μ(Ȳ_i, Ȳ_j)`, shape `[i, j]`.
    form: JetArray,
}

impl Reduction {
    pub fn new(spec: &ExactSymplecticSpec, params: &RicciFlatParameters) -> Result<Reduction> {
        let space = InducedSpace::new(spec.clone());
        let gamma_p = induced_connection(&space, params).coordinate_connection();
        let level = locate_sigma(&space)?;
        Ok(Reduction {
            space,
            gamma_p,
            level,
        })
    }

    pub fn level(&self) -> SigmaLevel {
        self.level
    }

    pub fn space(&self) -> &InducedSpace {
        &self.space
    }

    fn point(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut p = x.to_vec();
        p.push(t);
        p.push(self.level.s0);
        p
    }

    /// Horizontal lifts of `∂_i`: `Ȳ = ∂_i + c_t ∂_t + c_s ∂_s` with
    /// `μ(Ȳ, E) = μ(Ȳ, S) = 0`, as jets on `P`.
    fn horizontal_lifts(&self, mu: &JetArray) -> Result<JetArray> {
        let pd = self.space.dim();
        let m = pd - 2;
        let (t, s) = (m, m + 1);
        // [[μ(∂_t,E), μ(∂_s,E)], [μ(∂_t,S), μ(∂_s,S)]] (c_t, c_s) = −(μ(∂_i,E), μ(∂_i,S))
        let (a11, a12) = (mu.get(&[t, t]), mu.get(&[s, t]));
        let (a21, a22) = (mu.get(&[t, s]), mu.get(&[s, s]));
        let det = &(a11 * a22) - &(a12 * a21);
        let inv = det.recip().ok_or_else(|| Error::singular("⟨E, S⟩ block of μ", &[]))?;
        let zero = det.zeros_like();
        let mut cols = Vec::with_capacity(m);
        for i in 0..m {
            let (r1, r2) = (-mu.get(&[i, t]), -mu.get(&[i, s]));
            let ct = &(&(&r1 * a22) - &(a12 * &r2)) * &inv;
            let cs = &(&(a11 * &r2) - &(&r1 * a21)) * &inv;
            cols.push((ct, cs));
        }
        Ok(JetArray::from_fn(&[pd, m], |ix| {
            let (nu, i) = (ix[0], ix[1]);
            if nu == t {
                cols[i].0.clone()
            } else if nu == s {
                cols[i].1.clone()
            } else if nu == i {
                zero.lift(1.0)
            } else {
                zero.clone()
            }
        }))
    }

    fn local(&self, x: &[f64], t: f64, order: usize) -> Result<Local> {
        let pd = self.space.dim();
        let m = pd - 2;
        let (te, se) = (m, m + 1);
        let p = self.point(x, t);
        let mu1 = self.space.mu_field().eval(&p, order + 1)?;
        let mu = mu1.truncate(order);
        let lifts1 = self.horizontal_lifts(&mu1)?;
        let lifts = lifts1.truncate(order);
        let g = self.gamma_p.eval(&p, order)?;
        let dl: Vec<JetArray> = (0..pd).map(|k| lifts1.derivative(k)).collect();
        let zero = Jet::zero(pd, order);
        let mut reduced = Vec::with_capacity(pd * m * m);
        for i in 0..m {
            for j in 0..m {
                // a = ∇^P_{Ȳ_i} Ȳ_j
                let a: Vec<Jet> = (0..pd)
                    .map(|nu| {
                        let mut acc = zero.clone();
                        for mu_ in 0..pd {
                            let v = lifts.get(&[mu_, i]);
                            acc.mul_add_assign(v, dl[mu_].get(&[nu, j]));
                            for rho in 0..pd {
                                acc.mul_add_assign(&(v * g.get(&[nu, mu_, rho])), lifts.get(&[rho, j]));
                            }
                        }
                        acc
                    })
                    .collect();
                // ∇^Σ = a − μ(a, E) S
                let mut mu_ae = zero.clone();
                for rho in 0..pd {
                    mu_ae.mul_add_assign(&a[rho], mu.get(&[rho, te]));
                }
                let mut sig = a;
                sig[se] -= &mu_ae;
                // b = ∇^P_{Ȳ_i} S, correction μ(Ȳ_j, b) E
                let b: Vec<Jet> = (0..pd)
                    .map(|nu| {
                        let mut acc = zero.clone();
                        for mu_ in 0..pd {
                            acc.mul_add_assign(lifts.get(&[mu_, i]), g.get(&[nu, mu_, se]));
                        }
                        acc
                    })
                    .collect();
                let mut corr = zero.clone();
                for rho in 0..pd {
                    for nu in 0..pd {
                        corr.mul_add_assign(&(lifts.get(&[rho, j]) * &b[nu]), mu.get(&[rho, nu]));
                    }
                }
                sig[te] -= &corr;
                reduced.extend(sig);
            }
        }
        let reduced = JetArray::new(vec![m, m, pd], reduced);
        let reduced = JetArray::from_fn(&[pd, m, m], |ix| reduced.get(&[ix[1], ix[2], ix[0]]).clone());
        let form = JetArray::from_fn(&[m, m], |ix| {
            let mut acc = zero.clone();
            for a in 0..pd {
                for b in 0..pd {
                    acc.mul_add_assign(&(lifts.get(&[a, ix[0]]) * lifts.get(&[b, ix[1]])), mu.get(&[a, b]));
                }
            }
            acc
        });
        Ok(Local { reduced, form })
    }

    /// `ω_red(∂_i, ∂_j) = μ(Ȳ_i, Ȳ_j)` on `Σ` at `(x, t)`, as jets on `M`.
    pub fn reduced_form_jets(&self, x: &[f64], t: f64, order: usize) -> Result<JetArray> {
        let keep: Vec<usize> = (0..x.len()).collect();
        Ok(self.local(x, t, order)?.form.restrict(&keep))
    }

    /// Christoffel symbols of `∇^M` at `(x, t)`, as jets on `M`.
    pub fn reduced_christoffel_jets(&self, x: &[f64], t: f64, order: usize) -> Result<JetArray> {
        let m = x.len();
        let keep: Vec<usize> = (0..m).collect();
        let local = self.local(x, t, order)?;
        Ok(JetArray::from_fn(&[m, m, m], |ix| local.reduced.get(&[ix[0], ix[1], ix[2]]).clone()).restrict(&keep))
    }

    pub fn reduced_form(&self, x: &[f64], t: f64, y1: &[f64], y2: &[f64]) -> Result<f64> {
        let w = self.reduced_form_jets(x, t, 0)?;
        let m = x.len();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += y1[i] * w.get(&[i, j]).value() * y2[j];
            }
        }
        Ok(acc)
    }

    /// `∇^M_{Y1} Y2` for constant coefficient vectors at `(x, t)`.
    pub fn reduced_connection(&self, x: &[f64], t: f64, y1: &[f64], y2: &[f64]) -> Result<Vec<f64>> {
        let g = self.reduced_christoffel_jets(x, t, 0)?;
        let m = x.len();
        Ok((0..m)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        acc += y1[i] * g.get(&[k, i, j]).value() * y2[j];
                    }
                }
                acc
            })
            .collect())
    }

    /// `∇^Σ` on coordinate fields `∂_a, ∂_b` of `Σ` (`a, b` over `x` and `t`),
    /// shape `[ν, a, b]` with `ν` over all of `P`, as jets on `(x, t)`.
    pub fn sigma_christoffel_jets(&self, x: &[f64], t: f64, order: usize) -> Result<JetArray> {
        let pd = self.space.dim();
        let m = pd - 2;
        let te = m;
        let p = self.point(x, t);
        let g = self.gamma_p.eval(&p, order)?;
        let mu = self.space.mu_field().eval(&p, order)?;
        let out = JetArray::from_fn(&[pd, m + 1, m + 1], |ix| {
            let (nu, a, b) = (ix[0], ix[1], ix[2]);
            let mut v = g.get(&[nu, a, b]).clone();
            if nu == m + 1 {
                for rho in 0..pd {
                    v.mul_sub_assign(g.get(&[rho, a, b]), mu.get(&[rho, te]));
                }
            }
            v
        });
        let keep: Vec<usize> = (0..=m).collect();
        Ok(out.restrict(&keep))
    }

    /// `∇^M` as a connection field on `M` at fiber coordinate `t`.
    pub fn reduced_connection_field(&self, t: f64) -> ConnectionField {
        let r = self.clone();
        let m = self.space.base_dim();
        let f = DerivedField::new("reduced_christoffel", m, vec![m, m, m], 3, move |x, k| {
            r.reduced_christoffel_jets(x, t, k)
        });
        ConnectionField::from_field(f.into_ref())
    }

    /// `ω_red` as a 2-form field on `M` at fiber coordinate `t`.
    pub fn reduced_form_field(&self, t: f64) -> TwoFormField {
        let r = self.clone();
        let m = self.space.base_dim();
        let f = DerivedField::new("reduced_form", m, vec![m, m], 1, move |x, k| r.reduced_form_jets(x, t, k));
        TwoFormField::from_field(f.into_ref())
    }
}

const FIBER_OFFSETS: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

/// Induce, then reduce, and compare with the input at `samples` (points of
/// `P`; their `s` coordinate is replaced by `s₀`). With `scale_ledger`
/// off the reduced form is compared with `ω` itself.
pub fn roundtrip_report(
    spec: &ExactSymplecticSpec,
    params: &RicciFlatParameters,
    samples: &[Vec<f64>],
    seed: u64,
    tol: &Tolerances,
    scale_ledger: bool,
) -> Result<VerificationReport> {
    let red = Reduction::new(spec, params)?;
    let level = red.level();
    let m = spec.dim();
    let mut report = VerificationReport::new(spec.name.clone(), seed);
    let expected = -0.5 * 2f64.ln();
    report.push(Record::new(
        "s₀ = −½ ln 2",
        "Σ = {μ(S,E) = 1}",
        (level.s0 - expected).abs(),
        tol.s0,
    ));
    report.push(Record::new(
        "μ(S,E) − 1 on Σ",
        "Σ = {μ(S,E) = 1}",
        (level.pairing - 1.0).abs(),
        tol.s0,
    ));
    let scale = (2.0 * level.s0).exp();
    let factor = if scale_ledger { scale } else { 1.0 };
    if scale_ledger {
        report.scale_ledger.push(ScaleEntry {
            quantity: "ω_red / ω".into(),
            factor: scale,
            note: "e^{2s₀} = ½: the reduced form is ½ω, compared as such".into(),
        });
    }

    let form_identity = if scale_ledger { "ω_red − ½ω" } else { "ω_red − ω" };
    let checks = [
        Check::new("∇^M − ∇", "reduce(induce(∇)) = ∇", tol.roundtrip),
        Check::new(form_identity, "ω_red(Y1,Y2) = μ(Ȳ1,Ȳ2)", tol.omega_red),
        Check::new("∇^M ω_red", "the reduced connection is symplectic", tol.nabla_mu),
        Check::new("torsion of ∇^M", "the reduced connection is torsion-free", tol.torsion),
        Check::new("dω_red", "the reduced form is closed", tol.structure),
        Check::new("fiber independence", "∇^M and ω_red do not depend on the choice of y", tol.structure),
        Check::new("tangency of ∇^Σ", "∇^Σ_A B is tangent to Σ", tol.structure),
        Check::new("torsion of ∇^Σ", "∇^Σ is torsion-free", tol.structure),
        Check::new("L_E ∇^Σ", "E is affine for ∇^Σ", tol.structure),
        Check::new("reduced vectors are horizontal", "(∇^M_{Y1}Y2)‾ lies in H", tol.structure),
    ];
    let (records, diagnostics) = sweep(&checks, samples, |p| {
        let x = &p[..m];
        let t = p[m];
        let gm = red.reduced_connection_field(t);
        let wr = red.reduced_form_field(t);
        let g_in = spec.connection.eval(x, 0)?.values();
        let g_red = gm.eval(x, 0)?;
        let round = sup(g_red.values().iter().zip(g_in.iter()).map(|(a, b)| a - b));
        let w1 = wr.eval(x, 1)?;
        let w_in = spec.omega.eval(x, 0)?.values();
        let form = sup(w1.truncate(0).values().iter().zip(w_in.iter()).map(|(a, b)| a - factor * b));
        let nabla_w = sup(nabla_two_form_jets(&g_red, &w1).values().iter().copied());
        let torsion = sup(torsion_jets(&g_red).values().iter().copied());
        let closed = sup(d_two_form_jets(&w1).values().iter().copied());
        let mut fiber = 0.0f64;
        for dt in FIBER_OFFSETS {
            let g2 = red.reduced_christoffel_jets(x, t + dt, 0)?.values();
            let w2 = red.reduced_form_jets(x, t + dt, 0)?.values();
            fiber = fiber.max(sup(g2.iter().zip(g_red.values().iter()).map(|(a, b)| a - b)));
            fiber = fiber.max(sup(w2.iter().zip(w1.truncate(0).values().iter()).map(|(a, b)| a - b)));
        }
        let gs = red.sigma_christoffel_jets(x, t, 1)?;
        let gs0 = gs.truncate(0);
        let tangency = sup((0..=m).flat_map(|a| (0..=m).map(move |b| (a, b))).map(|(a, b)| gs0.get(&[m + 1, a, b]).value()));
        let ts = sup(gs0
            .values()
            .indexed_iter()
            .map(|(ix, v)| v - gs0.get(&[ix[0], ix[2], ix[1]]).value()));
        let le = sup(gs.derivative(m).values().iter().copied());
        let local = red.local(x, t, 0)?;
        let lam = spec.lambda.eval(x, 0)?;
        let mut horiz = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let v = |nu: usize| local.reduced.get(&[nu, i, j]).value();
                let lam_v: f64 = (0..m).map(|k| lam.get(&[k]).value() * v(k)).sum();
                horiz = horiz.max((v(m) + lam_v).abs()).max(v(m + 1).abs());
            }
        }
        Ok(vec![round, form, nabla_w, torsion, closed, fiber, tangency, ts, le, horiz])
    });
    records.into_iter().for_each(|r| report.push(r));
    report.diagnostics.extend(diagnostics);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::induction::ricci_flat_params;

    #[test]
    fn s0_is_half_log_half() {
        let space = InducedSpace::new(fixtures::flat4());
        let level = locate_sigma(&space).unwrap();
        assert!((level.s0 + 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((level.pairing - 1.0).abs() < 1e-15);
        let mut p = vec![0.0; 6];
        p[5] = level.s0 + 0.1;
        let mu = space.mu_at(&p).unwrap();
        assert!((mu[[5, 4]] - 0.2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn flat_reduction() {
        let spec = fixtures::flat4();
        let red = Reduction::new(&spec, &ricci_flat_params(&spec)).unwrap();
        let x = [0.3, -0.2, 0.5, 0.1];
        let e = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v
        };
        assert!((red.reduced_form(&x, 0.4, &e(0), &e(2)).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(red.reduced_form(&x, 0.4, &e(1), &e(1)).unwrap(), 0.0);
        let g = red.reduced_connection(&x, 0.4, &e(0), &e(2)).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
        // ∇^Σ_{X̄_1} X̄_3 = −½ω_13 E: coordinate ∂_1, ∂_3 differ from X̄ by λ∂_t terms
        let gs = red.sigma_christoffel_jets(&x, 0.4, 0).unwrap();
        assert!(gs.get(&[5, 0, 2]).value().abs() < 1e-15);
    }

    fn roundtrip(spec: &ExactSymplecticSpec, ledger: bool) -> VerificationReport {
        let samples = crate::sampling::induced_samples(4, 4, 7);
        roundtrip_report(spec, &ricci_flat_params(spec), &samples, 7, &Tolerances::default(), ledger).unwrap()
    }

    #[test]
    fn roundtrip_passes_on_fixtures() {
        for spec in [fixtures::flat4(), fixtures::quartic4()] {
            let r = roundtrip(&spec, true);
            assert!(r.overall, "{}", r.to_text());
            assert_eq!(r.scale_ledger.len(), 1);
            assert!((r.scale_ledger[0].factor - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn disabled_ledger_exposes_half_scale() {
        let r = roundtrip(&fixtures::quartic4(), false);
        assert!(!r.overall);
        let rec = r.record("ω_red − ω").unwrap();
        assert!((rec.residual - 0.5).abs() < 1e-12, "{}", rec.residual);
    }
}
