//! Numerical workbench for the induction of symplectic connections.
//!
//! Starting from an exact symplectic chart `(M, ω = dλ)` with a symplectic
//! connection `∇`, the crate builds the induced space `P = M × ℝ_t × ℝ_s`
//! with `μ = d(e^{2s}(dt + λ))`, the induced connection `∇^P` in the adapted
//! frame `{X̄_i, E, S}`, and checks its identities (torsion, `∇^P μ = 0`,
//! Ricci-flatness, affine and conformal fields, Hamiltonian lifts, reduction
//! round trip) at sampled points. All derivatives come from truncated Taylor
//! jets, so polynomial fixtures are exact up to rounding.

pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod field;
pub mod fixtures;
pub mod geometry;
pub mod induction;
pub mod jet;
pub mod lifts;
pub mod reduction;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
pub use expr::{ExprError, Expression};
pub use jet::Jet;
