//! Dual-coupled plug-and-play ADMM with spectral homogenization for linear
//! imaging inverse problems (sparse-view and limited-angle CT, Cartesian MRI).
//!
//! The outer loop alternates a conjugate-gradient data-consistency step, a
//! spectrally homogenized denoising step and a scaled dual update; see
//! [`solver::run`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod fidelity;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod operators;
pub mod priors;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{ComplexGrid, Grid, RealGrid, SeededRng};
