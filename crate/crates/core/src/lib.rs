//! Numerical toolkit for the Euler equations with data of linear growth.
//!
//! The crate measures generalized Campanato (mean-oscillation) seminorms of
//! fields written as a polynomial part plus a localized or periodic grid part,
//! applies dyadically truncated Calderón–Zygmund operators and the anchored
//! pressure, integrates the matrix Riccati flow of linear solutions and runs a
//! constructive semi-Lagrangian Euler solver whose bounds can be checked.

pub mod bessel;
pub mod campanato;
pub mod corpus;
pub mod dyadic;
pub mod error;
pub mod euler;
pub mod fft;
pub mod fields;
pub mod linearflows;
pub mod mollifier;
pub mod potential;
pub mod quadrature;
pub mod suites;

pub use error::{Error, Result};
