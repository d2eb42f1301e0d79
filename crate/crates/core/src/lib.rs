//! Numerical machinery for second-order optimality of bang-bang control
//! problems governed by semilinear elliptic equations.
//!
//! * [`field`]: grids, grid functions, atomic measures and quadrature.
//! * [`bessel`]: Bessel kernels, dual Bessel-potential norms, Wolff functional.
//! * [`transport`]: pushforward of measures under Lipschitz maps.
//! * [`pde`]: finite-difference state, linearized and adjoint solves, and the
//!   derivatives of the tracking objective.
//! * [`bangbang`]: stationarity, adjoint level sets, growth inequalities and
//!   the second-order condition.
//! * [`cli`]: the batch experiment driver behind the `ssc` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bangbang;
pub mod bessel;
pub mod cli;
pub mod error;
pub mod field;
mod linalg;
pub mod pde;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
