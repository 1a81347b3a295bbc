//! Exact ignorance regions and simulation experiments for multi-cause models
//! with a single latent confounder.
//!
//! Two structural models are covered:
//!
//! - [`linear`]: a linear-Gaussian factor model, where rescaling the latent
//!   variable produces a one-parameter family of structural parameters that
//!   all induce the same observable covariance.
//! - [`binary`]: an all-binary model in which the cause distribution factors
//!   uniquely, yet the dependence between outcome and confounder given the
//!   causes (one free cell of a 2x2 table) is left open by the data.
//!
//! On top of these, [`estimation`] fits the binary model by penalized maximum
//! likelihood (optionally with two proxy variables), [`positivity`] studies
//! how the causes separate the latent classes as their number grows, and
//! [`harness`] runs the four experiment families from a config file.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binary;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linear;
pub mod positivity;
pub mod seed;

pub use error::{Error, Result};
