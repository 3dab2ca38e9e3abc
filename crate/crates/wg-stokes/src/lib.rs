//! Lowest-order weak Galerkin finite elements for the 2D Stokes equations.
//!
//! Velocity and pressure are both approximated by piecewise constants; the
//! velocity unknowns carry independent cell and edge values (weak functions).
//! Two solution paths are provided: the symmetric indefinite saddle-point
//! system solved with MINRES, and a reduced symmetric positive definite
//! system posed on an explicitly constructed divergence-free velocity basis
//! and solved with CG.

pub mod analysis;
pub mod assembly;
pub mod divfree;
pub mod element;
mod error;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod vec2;
pub mod verify;
pub mod vtk;

pub use error::{Error, Result};
