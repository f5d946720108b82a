//! Viscous conservation laws `u_t + f(u)_x = ε u_xx` with nonnegative
//! measure initial data: flux models, heat kernel, finite-volume, Duhamel
//! and Hamilton–Jacobi solvers, decay-rate analysis and a reporting CLI.

// `!(x > 0.0)` is the idiom for rejecting NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod flux;
pub mod grid;
pub mod initial_data;
pub mod kernel;
pub mod quadrature;
pub mod solver;
pub mod tridiag;

pub use error::{Error, Result};
pub use flux::FluxSpec;
pub use grid::{Grid, GridFunction};
pub use initial_data::MeasureData;
