//! Invariant manifolds (spectral submanifolds, center manifolds) and their reduced
//! dynamics computed directly in physical coordinates from master-mode eigendata,
//! with backbone curves and forced response curves derived from the reduced dynamics.

pub mod analysis;
pub mod cohomology;
pub mod error;
pub mod forcing;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod polytensor;
pub mod sparse;
pub mod spectrum;
pub mod verify;

pub use error::{Result, SsmError};
pub use num_complex::Complex64;
