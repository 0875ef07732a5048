//! Finite-data entanglement quantification for multi-qubit states.
//!
//! The crate simulates tomography experiments with tensor-product SIC-POVMs,
//! samples Bayesian posteriors over density matrices under the Z and GH
//! priors, estimates states by linear inversion / clipped MLE with a
//! bootstrap, and evaluates two agreement criteria that decide how many
//! measurements are enough for a trustworthy negativity estimate.
//!
//! Index conventions used throughout:
//!
//! - Qubit 0 is the most significant tensor factor of a state: basis index
//!   `i = sum_q b_q * 2^(n-1-q)`.
//! - Compound POVM outcomes are flattened base-4 little-endian over the same
//!   qubit order: `k = sum_q alpha_q * 4^q`.

#![forbid(unsafe_code)]

pub mod criteria;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod povm;
pub mod priors;
pub mod qstate;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};

/// Seeded random source used by every sampler in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build the crate's random source from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
