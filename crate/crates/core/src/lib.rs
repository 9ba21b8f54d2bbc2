//! Simulation library for stochastic conditioned-state dynamics of open
//! quantum systems: continuous phase-space localization of a particle
//! monitored by its environment, general jump unravellings of Lindblad
//! master equations, reduced wave-packet collapse with Born-rule statistics,
//! and an exact frame/branching engine for discrete measurement chains.

pub mod analysis;
pub mod collapse;
pub mod error;
pub mod frames;
pub mod localization;
pub mod master;
pub mod numerics;
pub mod scenarios;
pub mod unravel;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Grid1D, RngStream, C64};
