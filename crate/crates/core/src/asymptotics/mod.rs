//! Transfinite-diameter estimators, Gram and free-energy computations,
//! Bernstein-Markov constants, the energy function and equilibrium oracles.

pub mod bm;
pub mod diameter;
pub mod energy;
pub mod gram;
pub mod oracle;

pub use bm::*;
pub use diameter::*;
pub use energy::*;
pub use gram::*;
pub use oracle::*;
