//! Positive interpolatory cubature formulas.
//!
//! Given a compact domain `Ω`, a nonnegative weight function `ω` and a
//! `K`-dimensional function space containing the constants, this crate builds a
//! cubature rule that integrates every function of the space exactly, uses at
//! most `K` nodes inside `Ω`, and has strictly positive weights.
//!
//! The construction runs in two stages:
//!
//! 1. [`ls_cubature::construct_nonnegative_ls_cf`] takes ever longer prefixes of
//!    an equidistributed sequence and computes least-squares weights through a
//!    discrete orthonormal basis until they are all nonnegative.
//! 2. [`steinitz::reduce`] removes nodes one null-space direction at a time
//!    until at most `K` remain.
//!
//! [`pipeline::construct`] chains both stages.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cubature;
pub mod error;
pub mod function_space;
pub mod geometry;
pub mod moments;
pub mod ls_cubature;
pub mod pipeline;
pub mod sequences;
pub mod steinitz;

pub use error::{CubatureError, Result};
