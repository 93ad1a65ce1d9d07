//! Simulation laboratory for sequential-measurement Leggett-Garg experiments.
//!
//! A photon is prepared, measured twice along two of three fixed polarizer
//! directions, and the product of the two ±1 outcomes is recorded. The
//! pair of measurement times is chosen per photon by a seeded pseudorandom
//! device. Collecting enough photons yields estimates of the three pair
//! correlations `P(a,b)`, `P(a,c)`, `P(b,c)`, which are then tested against
//!
//! ```text
//! |P(a,b) - P(a,c)| <= 1 - P(b,c)
//! ```
//!
//! The crate provides three families of world-models that can generate the
//! trial data:
//!
//! * [`quantum`]: projective polarization measurement with collapse, from a
//!   fixed or freshly random initial state.
//! * [`hv_models`]: deterministic hidden-variable responders, plus the
//!   setting-conditioned ("conspiracy") variant that escapes the bound.
//!
//! [`experiment`] drives the protocol reproducibly from a single master
//! seed, and [`analysis`] turns trial logs into reports.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod hv_models;
pub mod json;
pub mod quantum;
pub mod random;

pub use error::{LgError, Result};
