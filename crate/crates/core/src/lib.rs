//! Numerical laboratory for the spatial AK growth model on the circle under
//! the aggregate-feedback consumption policy.
//!
//! * [`grid`]: periodic discretization of S¹ and fields on it.
//! * [`spectral`]: principal eigenpair of `σ ∂²_θ + A(θ)` and the Fourier semigroup.
//! * [`model`]: policy constants `α`, `ψ`, `g` and the closed-loop generator `F`.
//! * [`solver`]: time integration, closed-form oracles, negativity diagnostics.
//! * [`certify`]: cone distances and non-invariance certificates.
//! * [`counterexample`]: witness functions and bump initial data.

pub mod certify;
pub mod counterexample;
pub mod error;
pub mod grid;
pub mod model;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, TorusGrid};
