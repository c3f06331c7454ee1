//! Near-field beamfocusing toolkit for uniform rectangular arrays.
//!
//! Analytical beamdepth and effective beamfocusing Rayleigh distance,
//! beam-pattern and window analysis, spatial degrees of freedom, polar
//! codebooks, sparse channel estimation and multiuser link experiments.

pub mod beamfocus;
pub mod beampattern;
pub mod capacity;
pub mod cli;
pub mod codebook;
pub mod dof;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod math;
pub mod steering;

pub use error::{Error, Result};
pub use geometry::{ArrayConfig, DerivedGeometry, PolarPoint};
pub use num_complex::Complex64;
