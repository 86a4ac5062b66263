//! Weighted Fekete configurations, transfinite diameters, Gram and free-energy
//! computations for vector-valued polynomial spaces, including polynomial
//! differential forms.

pub mod error;
pub mod indexing;
pub mod io;
pub mod linalg;
pub mod polyspace;
pub mod currents;
pub mod vandermonde;
pub mod asymptotics;
pub mod forms;
pub mod selftest;

pub use error::{FeketeError, Result};
