//! Friedrichs model laboratory.
//!
//! N discrete levels coupled to a half-line continuum through rational form
//! factors `v_n(w) = w^(h_n/2) q_n(w)`. The crate evaluates the self-energy in
//! closed form, builds the reduced resolvent on and off the cut, classifies
//! the zero-energy threshold, computes the reduced time evolution by an
//! oscillatory quadrature over the spectral density, and produces the
//! long-time asymptotic laws. An independent discretized-Hamiltonian oracle
//! is included for cross-checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod classify;
pub mod error;
pub mod evolve;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod polyrat;
pub mod resolvent;
pub mod selfenergy;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMat = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<Complex64>;
