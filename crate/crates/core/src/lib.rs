//! Coherent Kapitza-Dirac diffraction of charged particles by a
//! ponderomotive optical crystal.

pub mod config;
pub mod constants;
pub mod diffraction;
pub mod eigensolver;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod physics;
pub mod pipeline;

pub use error::{Error, Result};
