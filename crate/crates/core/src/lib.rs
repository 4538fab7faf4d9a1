//! Wave-packet expansion (WAX) simulator.
//!
//! Predicts how the center-of-mass wave packet of a released nanosphere
//! spreads under standard decoherence (blackbody radiation, gas collisions)
//! and continuous spontaneous localization (CSL), simulates the repeated
//! prepare/release/measure cycle as a Monte-Carlo campaign, and computes the
//! smallest CSL collapse rate a campaign could detect.
//!
//! Module map:
//!
//! - [`materials`]: constants, particle and environment descriptions, drop-distance arithmetic
//! - [`decoherence`]: localization rates per channel and their budget
//! - [`dynamics`]: Gaussian second-moment evolution, closed form and RK4
//! - [`protocol`]: seeded measurement campaigns and width estimates
//! - [`inference`]: minimum detectable collapse rate, closed form and Monte-Carlo
//! - [`commands`]: the pipelines behind each CLI subcommand
//! - [`config`]: `section.key = value` run configuration used by the CLI
//! - [`csv`]: CSV writers for every pipeline output

pub mod commands;
pub mod config;
pub mod csv;
pub mod decoherence;
pub mod dynamics;
pub mod error;
pub mod inference;
pub mod materials;
pub mod protocol;

pub use error::{Error, Result};
