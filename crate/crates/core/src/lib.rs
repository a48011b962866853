//! Riesz bases for `L²(∂Ω)` on triangulated polygons.
//!
//! The pipeline is mesh → P1 forms → discrete operator suite → spectrum of the
//! compact self-adjoint core operator → the two biorthogonal boundary bases
//! `(gₙ)`, `(yₙ)` → very weak Dirichlet solves and the `H^{1/2}` sandwich.
//!
//! ```no_run
//! use riesz_trace::{geometry, pipeline::Pipeline};
//!
//! let mesh = geometry::generate_structured_mesh(geometry::Domain::UnitSquare, 8);
//! let p = Pipeline::build(&mesh, riesz_trace::hilbert::DEFAULT_RANK_TOL).unwrap();
//! println!("kappa_1 = {}", p.eigen.kappa[0]);
//! ```

// Negated float comparisons are deliberate: NaN must fail every guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
mod dense;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod operators;
pub mod pipeline;
pub mod report;
pub mod riesz;
pub mod sampling;
pub mod solver;
pub mod spectral;
pub mod tolerances;

pub use error::{Error, Result};
