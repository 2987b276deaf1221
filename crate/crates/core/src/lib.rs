//! Simulated quantum annealing on random transverse-field Ising chains.
//!
//! The crate has two independent engines for the open chain
//! `H = -sum_i J_i sz_i sz_{i+1} - Gamma sum_i sx_i`:
//!
//! * [`fermion`]: the exact free-fermion solution (thermal bond correlations
//!   and coherent Bogoliubov-de Gennes evolution);
//! * [`pimc`]: a Suzuki-Trotter path-integral Monte Carlo with imaginary-time
//!   and space-time cluster moves.
//!
//! [`annealing`] drives both along a linear field schedule and [`analysis`]
//! extracts effective temperatures and scaling exponents from the results.

pub mod analysis;
pub mod annealing;
pub mod error;
pub mod fermion;
pub mod instances;
pub mod pimc;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use instances::{Distribution, Instance};
