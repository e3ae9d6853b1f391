//! Persistence probabilities of the integrated simple random walk and its
//! bridge.
//!
//! The walk `S_k = X_1 + ... + X_k` with symmetric `±1` steps and its area
//! `A_k = S_1 + ... + S_k` form a Markov chain on the integer lattice. This
//! crate computes laws of the pair exactly by dynamic programming, compares
//! them with their Gaussian limit via characteristic-function inversion,
//! samples conditioned (pinned) paths, and fits persistence exponents.

pub mod error;
pub mod exact;
pub mod exponent;
pub mod fourier;
pub mod lattice;
pub mod layer;
pub mod quadrature;
pub mod sampler;
pub mod transforms;
pub mod weight;

pub use error::{Error, Result};
pub use lattice::{
    adjoint_evolve, evolve, evolve_from, in_support, in_tilde_support, shift_states, AdjointState,
    LatticePoint, ParityMode, State, StepPath, Trajectory,
};
pub use layer::{Constraint, Grid, Layer};
pub use weight::{Mass, Precision, Value, Weight};
