//! Numerical laboratory for the two-dimensional Prandtl boundary-layer system.
//!
//! The crate provides a Fourier × finite-difference discretization of the
//! regularized, Galerkin-truncated Prandtl equations, the Gevrey-weighted
//! energy functionals built on the vorticity, linear stability analysis
//! around shear flows, and trajectory monitors.

pub mod calibration;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod gevrey;
pub mod grid;
pub mod linstab;
pub mod monitor;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use fields::State;
pub use grid::{GridConfig, SpectralGrid};
