//! Symmetric hyperbolic and symmetric positive first-order systems on
//! spacetime strips with timelike boundary: classification, admissible
//! boundary conditions, first-order reductions and a one-dimensional solver.

pub mod boundary;
pub mod clifford;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod numdiff;
pub mod reduction;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
