//! Simulation and estimation toolkit for cavity cat states prepared with a
//! dispersively coupled charge qubit.
//!
//! The pipeline runs in stages:
//!
//! - [`params`]: device constants, unit conversions and dispersive-regime checks.
//! - [`fock`]: truncated number-basis states and operators.
//! - [`hamiltonians`]: cosine, linearized, free and dispersive Hamiltonians.
//! - [`protocol`]: pulse / dispersive interaction / pulse / measurement sequence.
//! - [`dissipation`]: closed-form damped cat density matrices.
//! - [`wigner`]: closed-form and quadrature Wigner functions.
//! - [`readout`]: second-measurement probabilities that encode the cavity Q.
//! - [`oracle`]: Lindblad integrator and full-vs-dispersive comparison.
//! - [`qestimate`]: least-squares recovery of Q from readout curves.
//! - [`validate`]: the invariant suite behind `cavityq validate`.
//!
//! All frequencies and energies are angular frequencies in rad/s (energies
//! divided by ħ). Times are in seconds.

// `!(x >= 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvio;
pub mod dissipation;
pub mod error;
pub mod fock;
pub mod hamiltonians;
pub mod oracle;
pub mod params;
pub mod phase;
pub mod protocol;
pub mod qestimate;
pub mod readout;
pub mod validate;
pub mod wigner;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
