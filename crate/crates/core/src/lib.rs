//! Topological degrees of maps between even-dimensional spheres, computed from
//! analytic index formulas (de Rham pullback of a Chern form, a Hölder-continuous
//! kernel integral, and an operator-level Connes pairing) and cross-checked against
//! preimage counting.

// NaN inputs are rejected with negated comparisons; quadrature loops index several arrays at once
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibrate;
pub mod degree;
pub mod error;
pub mod exterior;
pub mod gamma;
pub mod geometry;
pub mod linalg;
pub mod maps;
pub mod projections;
pub mod quadrature;
pub mod scalar;
pub mod schatten;
pub mod specmod;
pub mod suites;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SpherePoint64 = geometry::SpherePoint<f64>;
pub type ChartPoint64 = geometry::ChartPoint<f64>;
pub type SpherePoint32 = geometry::SpherePoint<f32>;
pub type ChartPoint32 = geometry::ChartPoint<f32>;
pub type Projection64 = projections::HermitianProjection<f64>;
pub type Projection32 = projections::HermitianProjection<f32>;
pub type ExteriorOperator64 = exterior::ExteriorOperator<f64>;
pub type ExteriorOperator32 = exterior::ExteriorOperator<f32>;
