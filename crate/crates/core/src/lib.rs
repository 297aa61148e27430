// SPDX-License-Identifier: Apache-2.0

//! Exact and addition-as-int (AAI) arithmetic for probabilistic circuit
//! inference at configurable floating-point resolution.
//!
//! - [`float`]: bit-accurate reduced-precision values and multipliers.
//! - [`circuit`]: the circuit model, validation, generation and sampling.
//! - [`inference`]: MAR and MAP evaluation under a per-site multiplier plan.
//! - [`analysis`]: divergence and MAP failure estimates.
//! - [`correction`]: the expected log-error correction term.
//! - [`planner`]: greedy replacement and trade-off curves.
//! - [`energy`]: multiplier power models and bit requirements.

pub mod analysis;
pub mod circuit;
pub mod correction;
pub mod energy;
mod error;
pub mod float;
pub mod inference;
pub mod planner;

pub use circuit::{Circuit, CircuitBuilder, CircuitError, EdgeId, Unit, UnitId};
pub use error::Error;
pub use float::{CustomFloat, FloatConfig, FloatError, MulMode, MultResult, Rounding};
pub use inference::{Evaluator, MultiplierPlan};
