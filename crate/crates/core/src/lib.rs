//! Pseudo-spectral simulation of the inviscid 2D Boussinesq equations in
//! Lagrangian form.
//!
//! The flow map `phi` and its time derivative `v` are evolved as an ODE on a
//! periodic box, with the initial temperature `theta0` as a parameter. The
//! Eulerian velocity and temperature are recovered by composing with the
//! inverse flow map. An independent vorticity-form Eulerian solver is kept
//! beside it for cross-validation, and [`experiments`] builds the shrinking
//! bump sequences that exhibit non-uniform dependence of the time-1 solution
//! map on its data.

pub mod dump;
pub mod error;
pub mod eulerian;
pub mod experiments;
pub mod function_spaces;
pub mod lagrangian;
pub mod spectral;
pub mod validation;

pub use error::{Error, Result};
pub use function_spaces::{Diffeo, ScalarField, SobolevIndex, VectorField2};
pub use spectral::{Grid2D, Multiplier, SpectralCoeffs};
