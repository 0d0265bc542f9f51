mod common;

use std::sync::Arc;

use common::{central, christoffel, contract_ricci, fd_curvature, holonomy_curvature, rel_err};
use ndarray::{Array2, Array3, Ix2};
use scl::expr::Expression;
use scl::field::{DerivedField, FieldRef, JetArray};
use scl::fixtures;
use scl::geometry::{self, Chart, ConnectionField, OneFormField, TwoFormField};
use scl::induction::{ricci_flat_params, ExactSymplecticSpec};
use scl::jet::Jet;
use scl::sampling::base_samples;

fn e(s: &str) -> Expression {
    Expression::parse(s, 4).unwrap()
}

fn points(n: usize) -> Vec<Vec<f64>> {
    base_samples(4, n, 11)
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn constant_array(shape: &[usize], values: &[f64], nvars: usize) -> JetArray {
    let mut idx = 0;
    JetArray::from_fn(shape, |_| {
        let j = Jet::constant(nvars, 0, values[idx]);
        idx += 1;
        j
    })
}

#[test]
fn sin_jet_matches_finite_differences() {
    let ex = Expression::parse("sin(x1)", 1).unwrap();
    let jet = ex.eval_jet(&[0.7], 3).unwrap();
    let f = |q: &[f64]| vec![ex.eval_scalar(q).unwrap()];
    let d1 = central(f, &[0.7], 0, 1e-3)[0];
    let d2 = central(|q| central(f, q, 0, 1e-3), &[0.7], 0, 1e-3)[0];
    assert!((jet.partial(&[1]).unwrap() - d1).abs() / d1.abs() < 1e-6);
    assert!((jet.partial(&[2]).unwrap() - d2).abs() / d2.abs() < 1e-6);
    assert!((jet.partial(&[3]).unwrap() + 0.7f64.cos()).abs() < 1e-14);
}

#[test]
fn curl_of_polynomial_one_form_matches_finite_differences() {
    let chart = Chart::new(4).unwrap();
    let comps = ["x2^2*x3 - x4", "x1*x3^3", "2*x1*x2 + x4^2", "x1^2 - 3*x3*x2"];
    let lambda = OneFormField::new(&chart, comps.iter().map(|s| e(s)).collect()).unwrap();
    for p in points(5) {
        let jet = geometry::d_one_form(&lambda, &p).unwrap();
        let grads: Vec<Vec<f64>> = (0..4)
            .map(|i| central(|q| comps.iter().map(|s| e(s).eval_scalar(q).unwrap()).collect(), &p, i, 1e-3))
            .collect();
        let fd = Array2::from_shape_fn((4, 4), |(i, j)| grads[i][j] - grads[j][i]);
        assert!(max_abs((&jet - &fd).iter()) <= 1e-7);
    }
}

#[test]
fn omega_inverse_scaling_and_perturbation() {
    let chart = Chart::new(4).unwrap();
    let omega = fixtures::standard_lambda(&chart).exterior_derivative();
    let p = [0.1, 0.2, 0.3, 0.4];
    let pi = geometry::omega_inverse(&omega, &p).unwrap();
    let doubled = TwoFormField::from_upper(&chart, vec![(0, 2, e("-2")), (1, 3, e("-2"))]).unwrap();
    let w0 = omega.eval(&p, 0).unwrap().values().into_dimensionality::<Ix2>().unwrap();
    let w2 = doubled.eval(&p, 0).unwrap().values().into_dimensionality::<Ix2>().unwrap();
    assert_eq!(w2, &w0 * 2.0);
    let pi2 = geometry::omega_inverse(&doubled, &p).unwrap();
    assert!(max_abs((&pi2 - &(&pi / 2.0)).iter()) < 1e-15);

    let perturbed = TwoFormField::from_upper(
        &chart,
        vec![
            (0, 1, e("0.13*x1")),
            (0, 2, e("-1 + 0.2*x2^2")),
            (0, 3, e("0.07")),
            (1, 2, e("0.11*x3")),
            (1, 3, e("-1 - 0.05*x1*x4")),
            (2, 3, e("0.09")),
        ],
    )
    .unwrap();
    for p in points(4) {
        let w = perturbed.eval(&p, 0).unwrap().values().into_dimensionality::<Ix2>().unwrap();
        let pi = geometry::omega_inverse(&perturbed, &p).unwrap();
        assert!(max_abs((&pi.dot(&w) - &Array2::<f64>::eye(4)).iter()) <= 1e-12);
    }
}

#[test]
fn constant_christoffels_give_the_commutator() {
    let chart = Chart::new(4).unwrap();
    let entries = vec![
        (0, 0, 1, e("0.5")),
        (1, 0, 0, e("-1.25")),
        (2, 1, 3, e("2")),
        (3, 2, 2, e("0.75")),
        (0, 3, 3, e("-0.4")),
        (1, 1, 2, e("1.1")),
    ];
    let nabla = ConnectionField::from_symmetric(&chart, entries).unwrap();
    let p = [0.2, -0.1, 0.4, 0.3];
    let g = christoffel(&nabla, &p);
    let r = geometry::curvature(&nabla, &p).unwrap();
    let a = |i: usize| Array2::from_shape_fn((4, 4), |(l, k)| g[[l, i, k]]);
    for i in 0..4 {
        for j in 0..4 {
            let comm = a(i).dot(&a(j)) - a(j).dot(&a(i));
            for l in 0..4 {
                for k in 0..4 {
                    assert!((r[[l, k, i, j]] - comm[[l, k]]).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn quartic_curvature_matches_holonomy() {
    let spec = fixtures::quartic4();
    let gamma = |q: &[f64]| christoffel(&spec.connection, q);
    for p in points(2) {
        let r = geometry::curvature(&spec.connection, &p).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            let hol = holonomy_curvature(&gamma, &p, i, j, 0.02);
            let want = Array2::from_shape_fn((4, 4), |(l, k)| r[[l, k, i, j]]);
            let err = rel_err(want.iter(), hol.iter());
            assert!(err <= 1e-4, "plane ({i},{j}) err {err:e}");
        }
    }
}

#[test]
fn quartic_curvature_and_ricci_match_finite_differences() {
    let spec = fixtures::quartic4();
    let gamma = |q: &[f64]| christoffel(&spec.connection, q);
    for p in points(5) {
        let r = geometry::curvature(&spec.connection, &p).unwrap();
        let fd = fd_curvature(&gamma, &p);
        assert!(rel_err(r.iter(), fd.iter()) <= 1e-6);
        let ric = geometry::ricci(&spec.connection, &p).unwrap();
        let fd_ric = contract_ricci(&fd);
        assert!(rel_err(ric.iter(), fd_ric.iter()) <= 1e-6);
        assert!(max_abs((&ric - &ric.t()).iter()) <= 1e-10);
    }
}

#[test]
fn quartic_fixture_is_symplectic_and_torsion_free() {
    let spec = fixtures::quartic4();
    for p in points(10) {
        assert!(max_abs(geometry::torsion(&spec.connection, &p).unwrap().iter()) <= 1e-10);
        assert!(max_abs(geometry::nabla_two_form(&spec.connection, &spec.omega, &p).unwrap().iter()) <= 1e-10);
    }
    let chart = Chart::new(4).unwrap();
    let broken = ConnectionField::from_symmetric(&chart, vec![(0, 0, 0, e("x2"))]).unwrap();
    assert!(max_abs(geometry::nabla_two_form(&broken, &spec.omega, &[0.1, 0.2, 0.3, 0.4]).unwrap().iter()) > 0.1);
}

#[test]
fn random_symmetric_bilinear_reconstructs() {
    let chart = Chart::new(4).unwrap();
    let omega = fixtures::standard_lambda(&chart).exterior_derivative();
    let vals = [0.3, -1.2, 0.5, 0.7, -1.2, 2.0, 0.1, -0.4, 0.5, 0.1, 0.9, 1.3, 0.7, -0.4, 1.3, -0.6];
    let b: FieldRef = Arc::new(DerivedField::constant(4, vec![4, 4], vals.to_vec()));
    let p = [0.4, 0.1, -0.2, 0.8];
    let sigma = geometry::endo_from_bilinear(&omega, b.as_ref(), &p).unwrap();
    let w = omega.eval(&p, 0).unwrap().values().into_dimensionality::<Ix2>().unwrap();
    for i in 0..4 {
        for j in 0..4 {
            // ω(X, σY) with X = e_i, Y = e_j
            let lhs: f64 = (0..4).map(|k| w[[i, k]] * sigma[[k, j]]).sum();
            assert!((lhs - vals[i * 4 + j]).abs() <= 1e-12, "({i},{j})");
        }
    }
    let zero: FieldRef = Arc::new(DerivedField::zero(4, vec![4, 4]));
    assert!(max_abs(geometry::endo_from_bilinear(&omega, zero.as_ref(), &p).unwrap().iter()) == 0.0);
    let anti: FieldRef = omega.field().clone();
    assert!(geometry::endo_from_bilinear(&omega, anti.as_ref(), &p).is_err());
}

#[test]
fn rho_reconstructs_ricci_and_its_square_trace_is_invariant() {
    let spec = fixtures::quartic4();
    let p = [0.35, -0.6, 0.2, 0.45];
    let rho = geometry::rho_endomorphism(&spec.connection, &spec.omega, &p).unwrap();
    let ric = geometry::ricci(&spec.connection, &p).unwrap();
    let w = spec.omega.eval(&p, 0).unwrap().values().into_dimensionality::<Ix2>().unwrap();
    let rebuilt = w.dot(&rho);
    assert!(max_abs((&rebuilt - &ric).iter()) <= 1e-12);

    // linear symplectic change of frame: a shear preserving ω
    let mut a = Array2::<f64>::eye(4);
    a[[2, 0]] = 0.7;
    a[[3, 1]] = -0.3;
    a[[2, 1]] = 0.4;
    a[[3, 0]] = 0.4;
    let w2 = a.t().dot(&w).dot(&a);
    assert!(max_abs((&w2 - &w).iter()) <= 1e-15);
    let r2 = a.t().dot(&ric).dot(&a);
    let pi = geometry::omega_inverse(&spec.omega, &p).unwrap();
    let rho2 = pi.dot(&r2);
    let tr = |m: &Array2<f64>| m.dot(m).diag().sum();
    assert!((tr(&rho) - tr(&rho2)).abs() <= 1e-10);
}

#[test]
fn covariant_derivatives_match_finite_differences() {
    let spec = fixtures::quartic4();
    let params = ricci_flat_params(&spec);
    let p = [0.25, -0.4, 0.6, 0.1];
    let g = christoffel(&spec.connection, &p);
    let sig = |q: &[f64]| params.sigma.values(q).unwrap().iter().copied().collect::<Vec<f64>>();
    let s0 = Array2::from_shape_vec((4, 4), sig(&p)).unwrap();
    let ns = geometry::covariant_derivative_endo(&spec.connection, params.sigma.clone(), &p).unwrap();
    for i in 0..4 {
        let d = central(sig, &p, i, 1e-3);
        for k in 0..4 {
            for j in 0..4 {
                let mut want = d[k * 4 + j];
                for l in 0..4 {
                    want += g[[k, i, l]] * s0[[l, j]] - g[[l, i, j]] * s0[[k, l]];
                }
                assert!((ns[[i, k, j]] - want).abs() <= 1e-6 * want.abs().max(1.0));
            }
        }
    }
    let uf = |q: &[f64]| params.u.values(q).unwrap().iter().copied().collect::<Vec<f64>>();
    let u0 = uf(&p);
    let nu = geometry::covariant_derivative_vector(&spec.connection, params.u.clone(), &p).unwrap();
    for i in 0..4 {
        let d = central(uf, &p, i, 1e-3);
        for k in 0..4 {
            let want = d[k] + (0..4).map(|l| g[[k, i, l]] * u0[l]).sum::<f64>();
            assert!((nu[[i, k]] - want).abs() <= 1e-6 * want.abs().max(1.0));
        }
    }
    let id: FieldRef = Arc::new(DerivedField::constant(4, vec![4, 4], Array2::<f64>::eye(4).iter().copied().collect()));
    assert!(max_abs(geometry::covariant_derivative_endo(&spec.connection, id, &p).unwrap().iter()) <= 1e-15);
}

#[test]
fn e_w_split_traces_and_idempotence() {
    let spec = fixtures::quartic4();
    for p in points(3) {
        let r = geometry::curvature(&spec.connection, &p).unwrap();
        let ec = geometry::e_component(&spec.connection, &spec.omega, &p).unwrap();
        let wc = geometry::w_component(&spec.connection, &spec.omega, &p).unwrap();
        assert!(max_abs((&(&ec + &wc) - &r).iter()) <= 1e-12);
        let ric = geometry::ricci(&spec.connection, &p).unwrap();
        assert!(max_abs((&contract_ricci(&ec) - &ric).iter()) <= 1e-10);
        assert!(max_abs(contract_ricci(&wc).iter()) <= 1e-9);

        // E of the E-component alone reproduces it
        let w = spec.omega.eval(&p, 0).unwrap().values().into_dimensionality::<Ix2>().unwrap();
        let pi = geometry::omega_inverse(&spec.omega, &p).unwrap();
        let r_e = contract_ricci(&ec);
        let rho_e = pi.dot(&r_e);
        let flat = |a: &Array2<f64>| a.iter().copied().collect::<Vec<f64>>();
        let ee = geometry::e_component_jets(
            &constant_array(&[4, 4], &flat(&w), 4),
            &constant_array(&[4, 4], &flat(&rho_e), 4),
            &constant_array(&[4, 4], &flat(&r_e), 4),
        )
        .values();
        let ee = ee.into_shape_with_order((4, 4, 4, 4)).unwrap();
        assert!(max_abs((&ee - &ec).iter()) <= 1e-10);
    }
}

#[test]
fn ricci_type_verdicts() {
    let flat = fixtures::flat4();
    let quartic = fixtures::quartic4();
    let pts = points(5);
    assert!(geometry::is_ricci_type(&flat.connection, &flat.omega, &pts, 1e-9).unwrap().pass);
    let v = geometry::is_ricci_type(&quartic.connection, &quartic.omega, &pts, 1e-9).unwrap();
    assert!(!v.pass && v.max_w > 1e-3, "{}", v.max_w);
}

#[test]
fn explicit_christoffels_match_the_potential() {
    // φ = x1^3 x3 / 6: Γ_{kij} = ∂³φ is nonzero for {k,i,j} = {1,1,1} (x3) and {1,1,3} (x1)
    let chart = Chart::new(4).unwrap();
    let lambda = fixtures::standard_lambda(&chart);
    let omega = lambda.exterior_derivative();
    let from_phi = ConnectionField::from_potential(e("x1^3*x3/6"), &omega);
    let p = [0.3, 0.2, -0.5, 0.9];
    let pi = geometry::omega_inverse(&omega, &p).unwrap();
    let lower = |k: usize, i: usize, j: usize| {
        let mut idx = [k, i, j];
        idx.sort();
        match idx {
            [0, 0, 0] => p[2],
            [0, 0, 2] => p[0],
            _ => 0.0,
        }
    };
    let want = Array3::from_shape_fn((4, 4, 4), |(k, i, j)| (0..4).map(|l| pi[[k, l]] * lower(l, i, j)).sum::<f64>());
    let got: Array3<f64> = christoffel(&from_phi, &p);
    assert!(max_abs((&got - &want).iter()) <= 1e-15);
    let spec = ExactSymplecticSpec::new("cubic", chart, lambda, from_phi);
    assert!(spec.validate(&points(4), 1e-10).unwrap().passes());
}
