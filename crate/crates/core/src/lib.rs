//! Local discontinuous Galerkin discretisations of convection-diffusion-reaction
//! equations, advanced with additive IMEX Runge-Kutta schemes and a stage-level
//! treatment of time-dependent Dirichlet data.

pub mod error;
pub mod field;
pub mod harness;
pub mod imex;
pub mod ldg;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod space;
pub mod sparse;
pub mod treatment;

pub use error::{Error, Result};
