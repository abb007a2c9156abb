//! Floquet discriminants and band spectra of Hill operators
//! H = −d²/dx² + V(x) with complex periodic potentials.
//!
//! The spectrum is the set of energies where the discriminant Δ(E) is real
//! with −1 ≤ Δ ≤ 1. This crate computes Δ and its derivatives, scans and
//! traces spectral arcs in the complex E-plane, locates band edges and
//! critical points of Δ, checks the arc counts and meeting angles there, and
//! certifies nonreal spectrum for PT-symmetric potentials.

pub mod cli;
pub mod expr;
pub mod floquet;
pub mod oracle;
pub mod potential;
pub mod spectrum;

pub use num_complex::Complex64 as C64;
