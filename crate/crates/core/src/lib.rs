//! Simulation and auditing toolkit for EPR-Bohm style correlation experiments.
//!
//! - [`model`]: labeled station events, trials and datasets, with validation.
//! - [`models`]: outcome samplers (quantum singlet, deterministic sign, time-tag).
//! - [`simulator`]: reproducible parallel runs and coincidence-window matching.
//! - [`algebra`]: expressions in labeled ±1 variables, exact bounds, cyclicity.
//! - [`feasibility`]: does one joint distribution reproduce given correlations?
//! - [`stats`]: estimators, Bell sums, window scans.
//!
//! The exact parts are generic over the scalar type; the aliases below fix
//! the usual choices.

pub mod algebra;
pub mod error;
pub mod feasibility;
pub mod io;
pub mod model;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod simulator;
pub mod stats;

pub use error::{ConfigError, IoError, StatsError};
pub use scalar::{Coefficient, Real};

use num_rational::Rational64;

/// Expressions with exact rational coefficients.
pub type Expr = algebra::Expression<Rational64>;
pub type ExprTerm = algebra::Term<Rational64>;
pub type ExactBounds = algebra::Bounds<Rational64>;
pub type ExactCyclicity = algebra::Cyclicity<Rational64>;
/// Double-precision correlation sets and reports.
pub type Correlations = feasibility::CorrelationSet<f64>;
pub type FeasibilityReport = feasibility::LpReport<f64>;
pub type Estimate = stats::CorrelationEstimate<f64>;
