//! Fractional pilot reuse for multi-cell massive MIMO uplink.
//!
//! The crate estimates inter-cell interference statistics on a hexagonal
//! network, evaluates the closed-form achievable spectral efficiency under
//! MRC and P-ZFC combining, and searches the pilot-reuse parameters and user
//! load that maximize it.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod mu;
pub mod optimizer;
pub mod propagation;
pub mod se;

pub use error::{Error, Result};
