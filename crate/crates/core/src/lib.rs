//! Exact and sampled simulation of Wigner-friend Bell and GHZ scenarios.
//!
//! Layers, bottom up: [`qmath`] (dense linear algebra), [`wigner`] (labs,
//! macro-qubits, state construction), [`experiments`] (correlators,
//! parities, verification, sampling), then [`lhv`], [`optimize`] and
//! [`reasoning`] on top. [`exec`] selects sequential or rayon execution.

pub mod exec;
pub mod experiments;
pub mod lhv;
pub mod optimize;
pub mod qmath;
pub mod reasoning;
pub mod wigner;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
