//! Series-based, heteroskedasticity-robust LM specification tests for
//! semiparametric conditional mean models.
//!
//! The null model is estimated by least squares on a series design `W`;
//! the test asks whether additional series terms `Z` (present only under a
//! general nonparametric alternative) are jointly insignificant, using the
//! quadratic form
//!
//! ```text
//! xi = e' Zt (Zt' S Zt)^-1 Zt' e,   Zt = M_W Z,  S = diag(e_i^2)
//! ```
//!
//! normalized by the number of restrictions `r`: `t = (xi - r) / sqrt(2 r)`.
//!
//! Modules, bottom-up:
//! - [`basis`]: power and truncated-power spline bases, knot placement, interactions.
//! - [`design`]: null/alternative design construction and collinearity screening.
//! - [`regress`]: pivoted-QR least squares and the annihilator `M_W`.
//! - [`lmtest`] / [`dist`]: statistics, normal and chi-square reference distributions.
//! - [`bootstrap`]: wild bootstrap with Rademacher or Mammen multipliers.
//! - [`tuning`]: Mallows Cp, GCV and penalized choice of the number of restrictions.
//! - [`mc`]: Monte Carlo size/power harness.
//! - [`cli`]: command-line front end.

// `!(x > 0.0)` is used on purpose so NaN fails the check; index loops mirror the algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod bootstrap;
pub mod cli;
pub mod data;
pub mod design;
pub mod dist;
mod error;
pub mod linalg;
pub mod lmtest;
pub mod mc;
pub mod regress;
pub mod rng;
pub mod tuning;

pub use error::{Error, Result};
