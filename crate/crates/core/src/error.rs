// SPDX-License-Identifier: Apache-2.0

use crate::circuit::{Assignment, CircuitError};
use crate::float::FloatError;
use thiserror::Error;

/// Errors from evaluation, analysis, correction, planning and the energy
/// model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Float(#[from] FloatError),
    #[error("plan covers {got} multiplier sites, circuit has {expected}")]
    PlanSize { expected: usize, got: usize },
    #[error("data set is empty")]
    EmptyData,
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("joint state space too large for enumeration ({0} states, limit 2^20)")]
    StateSpaceTooLarge(String),
    #[error("infinite divergence: approximate probability is zero at {state:?}")]
    InfiniteDivergence { state: Assignment },
    #[error(
        "instance {instance}: approximate probability is zero at {state:?}; correction undefined"
    )]
    ZeroApproximation { instance: usize, state: Assignment },
    #[error("circuit is not deterministic: {0}")]
    NotDeterministic(String),
    #[error("fraction {0} is outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("log-probability {0} cannot be corrected (underflowed or undefined)")]
    UndefinedLog(f64),
    #[error("tolerance {0} is not a power of ten 10^-P with integer P >= 0")]
    InvalidEpsilon(f64),
    #[error("minimum value {0} is outside (0, 1]")]
    InvalidMinValue(f64),
    #[error("ranked site list is empty")]
    EmptyRanking,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
