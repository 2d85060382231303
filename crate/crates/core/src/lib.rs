//! Finite-element solver for two miscible incompressible liquids.
//!
//! The velocity obeys Navier-Stokes with a Korteweg stress driven by the
//! concentration gradient; the concentration is transported, diffused and
//! fed by a linear source. Part of the boundary carries a nonmonotone slip
//! law given by the Clarke subgradient of a locally Lipschitz potential,
//! regularized by mollification.
//!
//! Discretization: Taylor-Hood P2/P1 for velocity/pressure, P2 for the
//! concentration, implicit Euler in time with lagged skew-symmetric
//! convection.

pub mod diagnostics;
pub mod element;
pub mod error;
pub mod forms;
pub mod friction;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod spaces;
pub mod stepper;
pub mod verification;

pub use error::{Error, Result};
