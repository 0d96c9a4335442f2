//! Coarse edge indices of magnetic lattice Hamiltonians at desk scale.

pub mod error;
pub mod geometry;
pub mod linalg;

pub use error::{Error, Result};
pub mod operators;
pub mod spectral;
pub mod bloch;
pub mod index;
pub mod current;
pub mod experiments;
