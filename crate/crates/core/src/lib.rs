//! Piecewise-constant-argument discretization of `x'(t) = -a(t) x(t - r(t))`.
//!
//! The difference scheme lives in [`discretizer`], the RK4 oracle in [`reference`],
//! error bounds and the Yorke check in [`analysis`], and the Halanay-based
//! stability-transfer constants in [`halanay`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod discretizer;
pub mod error;
pub mod halanay;
pub mod model;
pub mod output;
pub mod reference;

pub use error::{Error, Result};
