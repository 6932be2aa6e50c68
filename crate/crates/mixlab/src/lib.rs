//! Energy-constrained optimal mixing of one-dimensional initial data.
//!
//! The crate is organised bottom-up:
//!
//! * [`torus_field`] periodic grid functions, spectral Poisson solves and the
//!   H⁻¹ mixing norm with its d-dimensional lift;
//! * [`piecewise`] exact integrals of piecewise-linear functions;
//! * [`rearrange`] symmetric-decreasing and odd rearrangements;
//! * [`variational`] the two constrained variational problems and their
//!   extremizers;
//! * [`bounds`] scalar lower bounds for the mixing time and the ODE behind them;
//! * [`descent_pde`] the steepest-descent evolution in Hamilton-Jacobi form;
//! * [`subsolution`] the sharp explicit subsolution and the ε-gap family;
//! * [`hull`] the constraint set, its convex hull and the wave cone;
//! * [`io`] CSV/JSON emission used by the `mixlab` binary.
//!
//! All numerical code is generic over [`Scalar`]; `f64` aliases are exported
//! at the crate root for everyday use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod descent_pde;
pub mod error;
pub mod hull;
pub mod io;
pub mod piecewise;
pub mod rearrange;
pub mod scalar;
pub mod subsolution;
pub mod torus_field;
pub mod variational;

pub use error::{MixError, Result};
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type GridFunction = torus_field::GridFunction<Real>;
pub type SpectralField = torus_field::SpectralField<Real>;
pub type MixParams = torus_field::MixParams<Real>;
pub type PiecewiseLinear = piecewise::PiecewiseLinear<Real>;
pub type CompactFunction = rearrange::CompactFunction<Real>;
pub type VariationalReport = variational::VariationalReport<Real>;
pub type BoundReport = bounds::BoundReport<Real>;
pub type OdeTrace = bounds::OdeTrace<Real>;
pub type EvolutionState = descent_pde::EvolutionState<Real>;
pub type SharpFamily = subsolution::SharpFamily<Real>;
pub type SubsolutionSnapshot = subsolution::SubsolutionSnapshot<Real>;
pub type HullPoint = hull::HullPoint<Real>;
