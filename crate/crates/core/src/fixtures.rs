//! Shipped fixtures on `ℝ⁴` with `λ = x3 dx1 + x4 dx2`.

use crate::expr::Expression;
use crate::geometry::{Chart, ConnectionField, OneFormField};
use crate::induction::ExactSymplecticSpec;

pub const FLAT4: &str = "flat4";
pub const QUARTIC4: &str = "quartic4";

/// Potential of the quartic fixture.
pub const QUARTIC_POTENTIAL: &str = "x1^4/24 + x1^2*x2^2/8 + x1*x2*x3*x4";

pub fn standard_lambda(chart: &Chart) -> OneFormField {
    let e = |s: &str| Expression::parse(s, 4).expect("fixture expression");
    OneFormField::new(chart, vec![e("x3"), e("x4"), e("0"), e("0")]).expect("fixture 1-form")
}

/// `Γ = 0`.
pub fn flat4() -> ExactSymplecticSpec {
    let chart = Chart::new(4).expect("dimension 4");
    let lambda = standard_lambda(&chart);
    let connection = ConnectionField::flat(&chart);
    ExactSymplecticSpec::new(FLAT4, chart, lambda, connection)
}

/// `Γ^k_{ij} = π^{kl} ∂_l∂_i∂_j φ` for [`QUARTIC_POTENTIAL`].
pub fn quartic4() -> ExactSymplecticSpec {
    let chart = Chart::new(4).expect("dimension 4");
    let lambda = standard_lambda(&chart);
    let omega = lambda.exterior_derivative();
    let phi = Expression::parse(QUARTIC_POTENTIAL, 4).expect("fixture potential");
    let connection = ConnectionField::from_potential(phi, &omega);
    ExactSymplecticSpec::new(QUARTIC4, chart, lambda, connection)
}

pub fn by_name(name: &str) -> Option<ExactSymplecticSpec> {
    match name {
        FLAT4 => Some(flat4()),
        QUARTIC4 => Some(quartic4()),
        _ => None,
    }
}
