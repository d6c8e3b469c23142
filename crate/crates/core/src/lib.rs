//! Numerical toolkit for the characterization of the exponential law through
//! the regression of one upper record value on two non-adjacent records.
//!
//! * [`distributions`] - hazard-based distribution abstraction and families.
//! * [`records`] - exact record simulation and conditional sampling.
//! * [`divided_differences`] - the average-derivative operator `M(u, v)` and
//!   its mixed partials `_iM_j`, with identity checks.
//! * [`regression`] - both sides of the regression identity.
//! * [`goftest`] - Monte-Carlo calibrated median/midrange exponentiality test.
//! * [`cli`] - the `recordchar` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod combinatorics;
pub mod distributions;
pub mod divided_differences;
pub mod error;
pub mod goftest;
pub mod quadrature;
pub mod records;
pub mod regression;
pub mod rng;
pub mod smooth;

pub use distributions::{
    ContinuousDistribution, Dist, DistSpec, ExponentialDist, FnDist, ParetoDist, WeibullDist,
};
pub use error::{Error, Result};
pub use smooth::{ExpG, GSpec, Polynomial, PowerG, ReciprocalG, SmoothFunction};
