//! Quadratic mean-field Lindblad dynamics for collision-induced decay and
//! decoherence in atomic gases.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: density matrices, Bloch vectors, Kraus channels, pair
//!   generators, partial traces and the generic quadratic right-hand side
//!   `dρ/dt = γ Tr₂(ℒ₁₂ ρ⊗ρ)`.
//! - [`meanfield`]: the three solvable qubit models (pair decay, pair
//!   dephasing, singlet purification), their closed-form solutions, a fixed
//!   step RK4 integrator and exponential-rate extraction.
//! - [`ensemble`]: finite-N physics. The symmetric-mixture master equation,
//!   a Gillespie pair-collision simulator, and an exact small-N Liouville
//!   solver used to measure how far the pair reduction is from a product.
//! - [`continuum`]: the N → ∞ conservation law `∂ₜp = ∂ₓ(x²p)` solved by
//!   characteristics.
//!
//! Times are in units of `1/γ` unless a function takes `gamma` explicitly.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod ensemble;
mod error;
pub mod meanfield;
pub mod qcore;

pub use error::{Error, Result};

/// Complex scalar used for every matrix in the crate.
pub type C64 = num_complex::Complex64;

/// Crate version, recorded in emitted metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
