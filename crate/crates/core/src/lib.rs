//! Small-time limit laws of driftless subordinators.
//!
//! `Y_t^{−t}` converges to a Pareto law Π_γ as `t → 0` exactly when the
//! Laplace exponent grows like `γ log s`. This crate evaluates that
//! condition through several equivalent criteria, simulates the marginals
//! and checks the limits by Monte Carlo.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod criteria;
pub mod dickman;
pub mod error;
pub mod laws;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod runner;
pub mod scale;
pub mod simulate;
pub mod transforms;

pub use error::{Error, Result};
pub use laws::{ExponentialLaw, ParetoLaw};
pub use model::{LaplaceExponent, LevyDensity, LevyTail, SubordinatorModel};
pub use scale::ScaleFunction;
pub use simulate::{RngState, SamplePlan, Samples, SamplingMethod, SamplingOptions};
pub use transforms::ModelExpr;
