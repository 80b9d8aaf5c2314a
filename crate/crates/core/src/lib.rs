//! Fluctuations of trace polynomials of `(r,s)`-Brownian motions on `GL_N`.
//!
//! * [`trace_algebra`]: words, trace polynomials, evaluation and text syntax.
//! * [`intertwine`]: the operators `D`, `L`, `Gamma` and the heat semigroup.
//! * [`covariance`]: the limiting covariance `sigma_T` and Gaussian field.
//! * [`matrix_lab`]: SDE simulation and Monte Carlo estimators.

pub mod covariance;
pub mod error;
pub mod intertwine;
pub mod linalg;
pub mod matrix_lab;
pub mod trace_algebra;

pub use error::{Error, Result};
