//! Spectral and paradifferential tools for quasilinear beam-wave systems on
//! the one-dimensional torus.

pub mod error;
pub mod evolve;
pub mod bridge_model;
pub mod linalg;
pub mod paralin;
pub mod parametrix;
pub mod quantize;
pub mod spectral_core;
pub mod suites;
pub mod symbol_calc;

pub use error::{Error, ErrorClass, Result};
