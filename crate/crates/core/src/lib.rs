//! Recursive marginal quantization (RMQ) of scalar stochastic differential
//! equations.
//!
//! The crate quantizes the time marginals of an SDE discretized with the
//! Euler, Milstein or simplified weak order 2.0 update, each written in the
//! affine form `U = m Z + c` with a Gaussian or one-degree-of-freedom
//! noncentral chi-squared innovation `Z`. The resulting grids form an
//! inhomogeneous Markov chain which prices European, Bermudan and discretely
//! monitored barrier claims.
//!
//! Module map:
//!
//! - [`distributions`]: normal and noncentral chi-squared partial moments, reflection.
//! - [`vq1d`]: Newton-Raphson quantization of a single scalar law.
//! - [`sde_models`]: GBM and CEV coefficients and derivatives.
//! - [`schemes`]: affine one-step updates for the three schemes.
//! - [`rmq`]: the recursion, transition matrices and boundary modes.
//! - [`pricing`]: grid pricers.
//! - [`oracles`]: Black-Scholes, Monte Carlo and Crank-Nicolson references.
//! - [`studies`]: weak-order and marginal-error experiments.
//! - [`io`]: CSV and JSON grid dumps.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod distributions;
pub mod error;
pub mod io;
mod newton;
pub mod oracles;
pub mod pricing;
pub mod rmq;
pub mod schemes;
pub mod sde_models;
pub mod studies;
pub mod tridiag;
pub mod vq1d;

pub use error::{Error, Result};
