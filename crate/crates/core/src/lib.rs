//! Superposition-trap simulation toolkit.
//!
//! Coherent superpositions are confined by null boundaries (destructive
//! interference, vanishing probability current) while collapsed or decohered
//! components leak out. The modules here check that claim numerically at
//! several levels of abstraction and recover collapse rates from the leakage:
//!
//! - [`quantum`]: finite-dimensional states, pulses, beam splitters, measurement.
//! - [`collapse`]: stochastic collapse channels and their ensemble averages.
//! - [`wavefield`]: 1D Crank–Nicolson evolution with continuity diagnostics.
//! - [`pathsum`]: brute-force lattice path sums (factorization and screening).
//! - [`optical`]: the recirculating Mach–Zehnder photon trap.
//! - [`atom`]: the two-level atom interferometer trap with a push pulse.
//! - [`inference`]: maximum-likelihood recovery of escape and collapse rates.

pub mod atom;
pub mod collapse;
pub mod error;
pub mod inference;
pub mod optical;
pub mod pathsum;
pub mod quantum;
pub mod rng;
pub mod wavefield;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use rng::RngStream;
