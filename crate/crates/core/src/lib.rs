//! Simulation and analysis of one-axis-twisting (OAT) spin-squeezing metrology.
//!
//! The crate is organized bottom-up:
//!
//! - [`spin`]: exact Dicke-basis states of `N` spin-1/2 particles, collective
//!   operators, rotations, OAT evolution, moments and Husimi-Q evaluation.
//! - [`metrology`]: quantum Fisher information (closed form and numeric),
//!   twist-untwist protocols, method-of-moments error, small-angle analytics,
//!   asymptotic predictors and phase-diagram scans.
//! - [`lattice`]: finite-range OAT on a periodic spin-1/2 ring, with
//!   statevector dynamics and the analytic variance formulas.
//! - [`optimize`]: derivative-free maximization over directions on the sphere.
//!
//! Conventions used everywhere: the Dicke index `ℓ` counts particles in the
//! single-particle state `|1⟩`, so `J_z` has eigenvalue `(N - 2ℓ)/2`, and a
//! direction `n = (sin ξ cos θ, sin ξ sin θ, cos ξ)`.

pub mod error;
pub mod lattice;
pub mod metrology;
pub mod optimize;
pub mod quadrature;
pub mod readout;
pub mod spin;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use spin::{CollectiveOperator, CollectiveState, Direction, OperatorKind, TwistSign, Zeta};
