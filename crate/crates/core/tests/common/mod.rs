//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here uses jets beyond order 0: derivatives come from central
//! differences and curvature from parallel transport.

#![allow(dead_code)]

use ndarray::{Array2, Array3, Array4};
use scl::geometry::ConnectionField;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-3;

/// `‖a − b‖∞ / max(‖a‖∞, 1)`.
pub fn rel_err<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut diff, mut norm) = (0.0f64, 0.0f64);
    for (x, y) in a.into_iter().zip(b) {
        diff = diff.max((x - y).abs());
        norm = norm.max(x.abs());
    }
    diff / norm.max(1.0)
}

/// Christoffel values `Γ[k][i][j]` at a point, order 0 only.
pub fn christoffel(nabla: &ConnectionField, p: &[f64]) -> Array3<f64> {
    let d = nabla.dim();
    nabla
        .eval(p, 0)
        .unwrap()
        .values()
        .into_shape_with_order((d, d, d))
        .unwrap()
}

/// Fourth-order central difference of a vector-valued function along `e_var`.
pub fn central<F: Fn(&[f64]) -> Vec<f64>>(f: F, p: &[f64], var: usize, h: f64) -> Vec<f64> {
    let at = |c: f64| {
        let mut q = p.to_vec();
        q[var] += c * h;
        f(&q)
    };
    let (p2, p1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
    (0..p1.len())
        .map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h))
        .collect()
}

/// `R^l_{kij} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}` with
/// the derivatives taken by finite differences of `gamma`.
pub fn fd_curvature(gamma: &dyn Fn(&[f64]) -> Array3<f64>, p: &[f64]) -> Array4<f64> {
    let d = p.len();
    let g = gamma(p);
    let dg: Vec<Array3<f64>> = (0..d)
        .map(|i| {
            let v = central(|q| gamma(q).iter().copied().collect(), p, i, FD_STEP);
            Array3::from_shape_vec((d, d, d), v).unwrap()
        })
        .collect();
    Array4::from_shape_fn((d, d, d, d), |(l, k, i, j)| {
        let mut r = dg[i][[l, j, k]] - dg[j][[l, i, k]];
        for m in 0..d {
            r += g[[l, i, m]] * g[[m, j, k]] - g[[l, j, m]] * g[[m, i, k]];
        }
        r
    })
}

/// `r_{ij} = Σ_l R^l_{jil}`.
pub fn contract_ricci(r: &Array4<f64>) -> Array2<f64> {
    let d = r.shape()[0];
    Array2::from_shape_fn((d, d), |(i, j)| (0..d).map(|l| r[[l, j, i, l]]).sum())
}

/// Parallel transport of the identity along the straight segment `a → b`
/// with RK4: `dV/dτ = −Γ(γ)(γ′, V)`.
fn transport(gamma: &dyn Fn(&[f64]) -> Array3<f64>, a: &[f64], b: &[f64], v: Array2<f64>, steps: usize) -> Array2<f64> {
    let d = a.len();
    let vel: Vec<f64> = (0..d).map(|i| b[i] - a[i]).collect();
    let rhs = |tau: f64, v: &Array2<f64>| {
        let q: Vec<f64> = (0..d).map(|i| a[i] + tau * vel[i]).collect();
        let g = gamma(&q);
        Array2::from_shape_fn((d, d), |(l, c)| {
            let mut acc = 0.0;
            for k in 0..d {
                for j in 0..d {
                    acc -= g[[l, k, j]] * vel[k] * v[[j, c]];
                }
            }
            acc
        })
    };
    let h = 1.0 / steps as f64;
    let mut v = v;
    for s in 0..steps {
        let tau = s as f64 * h;
        let k1 = rhs(tau, &v);
        let k2 = rhs(tau + h / 2.0, &(&v + &(&k1 * (h / 2.0))));
        let k3 = rhs(tau + h / 2.0, &(&v + &(&k2 * (h / 2.0))));
        let k4 = rhs(tau + h, &(&v + &(&k3 * h)));
        v = &v + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * (h / 6.0));
    }
    v
}

/// `(I − Hol)/h²` for the square `p → p + h e_i → p + h e_i + h e_j → p + h e_j → p`.
fn loop_defect(gamma: &dyn Fn(&[f64]) -> Array3<f64>, p: &[f64], i: usize, j: usize, h: f64) -> Array2<f64> {
    let d = p.len();
    let corner = |a: f64, b: f64| {
        let mut q = p.to_vec();
        q[i] += a * h;
        q[j] += b * h;
        q
    };
    let pts = [corner(0.0, 0.0), corner(1.0, 0.0), corner(1.0, 1.0), corner(0.0, 1.0), corner(0.0, 0.0)];
    let mut v = Array2::eye(d);
    for w in pts.windows(2) {
        v = transport(gamma, &w[0], &w[1], v, 16);
    }
    (Array2::eye(d) - v) / (h * h)
}

/// Holonomy estimate of the matrix `R(∂_i, ∂_j)^l_k`, with two Richardson
/// steps over the loop sizes `h, h/2, h/4`.
pub fn holonomy_curvature(gamma: &dyn Fn(&[f64]) -> Array3<f64>, p: &[f64], i: usize, j: usize, h: f64) -> Array2<f64> {
    let k1 = loop_defect(gamma, p, i, j, h);
    let k2 = loop_defect(gamma, p, i, j, h / 2.0);
    let k4 = loop_defect(gamma, p, i, j, h / 4.0);
    (k4 * 8.0 - k2 * 6.0 + k1) / 3.0
}
