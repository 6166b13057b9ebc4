//! Generalized Gamma-z calculus for sub-Riemannian structures.
//!
//! The crate computes the z-Bochner decomposition of a degenerate diffusion
//! generator, extracts pointwise curvature matrices, scans them over regions
//! and checks entropy dissipation with a Fokker–Planck solver.

pub mod bochner;
pub mod bound;
pub mod dynamics;
pub mod error;
pub mod exprdsl;
pub mod gamma;
pub mod jets;
mod linalg;
pub mod structure;

pub use error::{Error, Result};
pub use jets::Jet3;
pub use structure::{Preset, Structure};
