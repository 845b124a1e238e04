//! Multiple orthogonal polynomials generated by the two-diagonal recurrence
//! `x Q_n = Q_{n+1} + a_{n-p} Q_{n-p}`: banded determinants and their zeros,
//! the block-Toeplitz symbol and its branches, the star-like sets carrying
//! the zeros, equilibrium densities and asymptotic identities.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod error;
pub mod geneig;
pub mod geometry;
pub mod linalg;
pub mod measures;
pub mod patterns;
pub mod poly;
mod prelude;
pub mod recurrence;
pub mod scalar;
pub mod symbol;

pub use error::{Error, Result};
pub use num_complex::Complex64;
