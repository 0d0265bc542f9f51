use ndarray::{Array1, Array2};
use scl::expr::Expression;
use scl::fixtures;
use scl::induction::{lie_derivative_two_form, InducedSpace};
use scl::lifts::*;
use scl::sampling::induced_samples;

const TOL: f64 = 1e-9;

fn e(s: &str, d: usize) -> Expression {
    Expression::parse(s, d).unwrap()
}

fn space() -> InducedSpace {
    InducedSpace::new(fixtures::flat4())
}

fn pair(name: &str, f: &str) -> HamiltonianPair {
    let spec = fixtures::flat4();
    HamiltonianPair::from_hamiltonian(name, spec.omega.inverse_field().into_ref(), e(f, 4))
}

#[test]
fn three_element_family_lifts_and_brackets() {
    let sp = space();
    let samples = induced_samples(4, 8, 17);
    let family = [pair("h1", "x1"), pair("h2", "x3 + x2*x4"), pair("h3", "x1*x3 + x2^2/2")];
    for hp in &family {
        let (records, _) = verify_hamiltonian_lift(hp, &sp, &samples, TOL);
        for r in records {
            assert!(r.pass, "{} {}", r.identity, r.residual);
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let res = bracket_residual(&family[i], &family[j], &sp, &samples).unwrap();
            assert!(res <= TOL, "({i},{j}) {res:e}");
        }
    }
    // the bracket pair is itself a Hamiltonian pair
    let b = family[1].bracket(&family[2]);
    let (records, _) = verify_hamiltonian_lift(&b, &sp, &samples, TOL);
    assert!(records.iter().all(|r| r.pass));
}

#[test]
fn commuting_translations() {
    let sp = space();
    let samples = induced_samples(4, 4, 3);
    let res = bracket_residual(&pair("a", "x1"), &pair("b", "x2"), &sp, &samples).unwrap();
    assert!(res <= 1e-10);
}

/// Matrix of a linear vector field from its values on the basis.
fn linear_matrix(hp: &HamiltonianPair) -> Array2<f64> {
    let mut a = Array2::zeros((4, 4));
    for j in 0..4 {
        let mut x = vec![0.0; 4];
        x[j] = 1.0;
        let v = hp.x.values(&x).unwrap();
        for i in 0..4 {
            a[[i, j]] = v[[i]];
        }
    }
    a
}

#[test]
fn linear_fields_match_the_hand_bracket() {
    let (h1, h2) = (pair("q", "x1*x3"), pair("r", "x2*x3 - x4^2/2"));
    let (a, b) = (linear_matrix(&h1), linear_matrix(&h2));
    let br = h1.bracket(&h2);
    for x in [[0.3, -0.2, 0.5, 0.9], [1.0, 2.0, -1.0, 0.5]] {
        let xv = Array1::from(x.to_vec());
        // [X, Y] = (B A − A B) x for X = A x, Y = B x
        let want = (b.dot(&a) - a.dot(&b)).dot(&xv);
        let got = br.x.values(&x).unwrap();
        for k in 0..4 {
            assert!((got[[k]] - want[k]).abs() <= TOL);
        }
    }
}

fn euler(b: Option<&str>, a: Option<&str>) -> ConformalData {
    let c = ["x1/2", "x2/2", "x3/2", "x4/2"].iter().map(|s| e(s, 4)).collect();
    ConformalData::new(c, b.map(|s| e(s, 5)), a.map(|s| e(s, 5))).unwrap()
}

const EULER_POTENTIAL: &str = "x5 + (x1*x3 + x2*x4)/2";

#[test]
fn euler_field_lifts() {
    let sp = space();
    let samples = induced_samples(4, 6, 9);
    let cd = euler(Some(EULER_POTENTIAL), Some(EULER_POTENTIAL));
    let (records, diags) = verify_conformal(&cd, &sp, &samples, TOL);
    assert!(diags.is_empty());
    assert_eq!(records.len(), 9);
    for r in records {
        assert!(r.pass, "{} {}", r.identity, r.residual);
    }
    for p in &samples {
        let mut q = p.clone();
        q[5] = 0.0;
        let want = -(q[4] + (q[0] * q[2] + q[1] * q[3]) / 2.0);
        assert!((conformal_moment_2(&cd, &q).unwrap() - want).abs() <= 1e-14);
    }
}

#[test]
fn potential_without_fiber_slope_is_reported() {
    let sp = space();
    let samples = induced_samples(4, 3, 1);
    let cd = euler(Some("(x1*x3 + x2*x4)/2"), None);
    let (records, _) = verify_conformal(&cd, &sp, &samples, TOL);
    let zb = records.iter().find(|r| r.identity == "Zb − 1").unwrap();
    assert!(!zb.pass && (zb.residual - 1.0).abs() < 1e-12);
}

#[test]
fn zero_potential_defect_sits_in_the_ds_block() {
    let sp = space();
    let cd = euler(None, Some("0"));
    let lift = conformal_lift_2(&cd, &sp).unwrap();
    let mu = sp.mu_field();
    let p = [0.4, -0.3, 0.2, 0.7, 0.1, -0.2];
    let l = lie_derivative_two_form(lift.as_ref(), mu.as_ref(), &p).unwrap();
    let mut defect = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            if i == 5 || j == 5 {
                defect = defect.max(l[[i, j]].abs());
            } else {
                assert!(l[[i, j]].abs() <= 1e-12, "({i},{j})");
            }
        }
    }
    assert!(defect > 0.1);
    assert!(conformal_lift_1(&cd, &sp).is_err());
}
