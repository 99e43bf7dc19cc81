//! Numerical core for generalized Wigner matrices with a general variance
//! profile.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is a
//! pure function of its inputs:
//!
//! - [`profile`]: doubly stochastic variance matrices `S` (mean-field, band,
//!   mixtures, Sinkhorn-normalized custom weights).
//! - [`ensemble`]: entry laws and reproducible Hermitian samples `H`.
//! - [`sc`]: semicircle density, Stieltjes transform, counting function and
//!   classical eigenvalue locations.
//! - [`stability`]: the norms `Γ`, `Γ̃` of `(1 − m²S)⁻¹`, spectral gaps of `S`
//!   and the spectral-domain thresholds built from them.
//! - [`resolvent`]: Green functions, minors, control parameters, Schur
//!   complement terms and fluctuation averages.
//! - [`spectral`] and [`stats`]: eigenvalue statistics and small estimators
//!   used by the experiment harness.
#![no_std]

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod profile;
pub mod resolvent;
pub mod sc;
pub mod spectral;
pub mod stability;
pub mod stats;

pub use error::{Error, Result};

/// Complex double used throughout (the same type as `faer::c64`).
#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex<f64>;
