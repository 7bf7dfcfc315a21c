//! Command-line front end for the phase-field simulator: config parsing
//! and experiment presets ([`config`]), run orchestration and bound sweeps
//! ([`runner`]), and the error type shared by both ([`error`]).

pub mod config;
pub mod error;
pub mod runner;
