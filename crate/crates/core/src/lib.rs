//! Phase-field simulation of a binary mixture with connectedness
//! penalties, plus sharp-interface reference computations.
//!
//! The library is organized around a cell-centered grid:
//!
//! - [`grid`]: fields, quadrature, the reflecting Laplacian, dump format;
//! - [`params`]: model constants and validation;
//! - [`energy`]: double well, negative-Laplacian solves, energy breakdown;
//! - [`connect`]: geodesic connectedness penalties and their gradients;
//! - [`flow`]: semi-implicit conserved gradient-flow stepping;
//! - [`oracle`]: sharp-interface energies, Steiner trees, scaling bounds
//!   and shape diagnostics for cross-checking the field simulations.

pub mod connect;
pub mod energy;
pub mod error;
pub mod flow;
pub mod grid;
pub mod oracle;
pub mod params;
mod spectral;

pub use error::{Error, Result};
