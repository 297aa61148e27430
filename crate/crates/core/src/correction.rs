// SPDX-License-Identifier: Apache-2.0

//! Expected log-error correction for approximate circuits.
//!
//! The correction is the mean of `log2 p64(x) - log2 p~(x)` over samples from
//! the exact model. Adding it to `log2 p~(x)` raises the underestimate.

use crate::analysis::delta_det;
use crate::circuit::{sample, validate, Assignment, Circuit};
use crate::error::Error;
use crate::float::FloatConfig;
use crate::inference::{Evaluator, MultiplierPlan};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_CALIBRATION_SAMPLES: usize = 5000;
pub const MIN_CALIBRATION_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionMethod {
    MonteCarlo,
    ClosedFormDet,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTerm {
    /// Mean `log2 p64 - log2 p~`; added to approximate log-probabilities.
    pub log2_epsilon: f64,
    pub n_calibration: usize,
    pub std_error: f64,
    pub method: CorrectionMethod,
}

impl CorrectionTerm {
    pub const NONE: CorrectionTerm = CorrectionTerm {
        log2_epsilon: 0.0,
        n_calibration: 0,
        std_error: 0.0,
        method: CorrectionMethod::ClosedFormDet,
    };

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("correction terms always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// `log2 p64(x) - log2 p~(x)` for every row. Fails on the first row whose
/// approximate value is zero while the exact one is positive.
pub fn signed_log_errors(
    c: &Circuit,
    data: &[Assignment],
    cfg: FloatConfig,
    plan: &MultiplierPlan,
) -> Result<Vec<f64>, Error> {
    let base = Evaluator::baseline(c);
    let approx = Evaluator::new(c, cfg, plan)?;
    data.par_iter()
        .enumerate()
        .map(|(i, x)| {
            let b = base.eval_mar(x)?;
            let a = approx.eval_mar(x)?;
            if a.value.is_zero {
                return Err(Error::ZeroApproximation {
                    instance: i,
                    state: x.clone(),
                });
            }
            Ok(b.log2 - a.log2)
        })
        .collect()
}

/// Monte-Carlo estimate from `n` samples of the exact model.
pub fn estimate_log_epsilon(
    c: &Circuit,
    cfg: FloatConfig,
    plan: &MultiplierPlan,
    n: usize,
    seed: u64,
) -> Result<CorrectionTerm, Error> {
    if n < MIN_CALIBRATION_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            min: MIN_CALIBRATION_SAMPLES,
        });
    }
    let data = sample(c, seed, n)?;
    let errs = signed_log_errors(c, &data, cfg, plan)?;
    let nf = n as f64;
    let mean = errs.iter().sum::<f64>() / nf;
    let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(CorrectionTerm {
        log2_epsilon: mean,
        n_calibration: n,
        std_error: (var / nf).sqrt(),
        method: CorrectionMethod::MonteCarlo,
    })
}

/// Closed form for deterministic circuits: the weighted Mitchell error of the
/// weights, `Σ_w Δ_w * mass(w)`.
pub fn closed_form_log_epsilon_det(
    c: &Circuit,
    cfg: &FloatConfig,
) -> Result<CorrectionTerm, Error> {
    let report = validate(c);
    if !report.deterministic {
        let why = report
            .violations
            .iter()
            .find(|v| v.reason.contains("determinis"))
            .map(|v| format!("unit {}: {}", v.unit, v.reason))
            .unwrap_or_else(|| "determinism check failed".into());
        return Err(Error::NotDeterministic(why));
    }
    Ok(CorrectionTerm {
        log2_epsilon: delta_det(c, cfg)?.delta_det,
        n_calibration: 0,
        std_error: 0.0,
        method: CorrectionMethod::ClosedFormDet,
    })
}

/// `log2 p~ + log2 eps`. An underflowed (infinite) input is an error, not
/// something to correct.
pub fn apply_correction(log2_p_tilde: f64, term: &CorrectionTerm) -> Result<f64, Error> {
    if !log2_p_tilde.is_finite() {
        return Err(Error::UndefinedLog(log2_p_tilde));
    }
    Ok(log2_p_tilde + term.log2_epsilon)
}
