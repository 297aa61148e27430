// SPDX-License-Identifier: Apache-2.0

//! Error quantities for circuits evaluated with AAI multipliers.
//!
//! All logarithms are base 2. `Δ_w = log2(1 + F_w) - F_w` is the Mitchell
//! error of a weight whose quantized mantissa fraction is `F_w`.

use crate::circuit::{
    edge_masses, sample, validate, Circuit, DeterminismCheck, EdgeId, EXHAUSTIVE_STATE_LIMIT,
};
use crate::error::Error;
use crate::float::{mitchell_delta, FloatConfig};
use crate::inference::{induced_tree_edges, Evaluator, MultiplierPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightContribution {
    pub edge: EdgeId,
    pub delta_w: f64,
    pub mass: f64,
    pub contribution: f64,
}

/// Whether `delta_det` is the divergence itself or only a bound on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Equality,
    Bound,
}

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub delta_det: f64,
    pub relation: Relation,
    pub determinism_check: DeterminismCheck,
    /// Per-edge `Δ_w * mass`; sums to `delta_det`.
    pub contributions: Vec<WeightContribution>,
    /// Truncated Monte-Carlo surrogate for non-deterministic circuits (the
    /// constant and higher-order terms are dropped).
    pub delta_dc: Option<McEstimate>,
    /// Per-edge attribution of the surrogate: `Δ_w` times the share of
    /// samples whose top induced tree uses the edge.
    pub dc_contributions: Option<Vec<WeightContribution>>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// `Δ_w` of every edge under `cfg`, from the quantized weight.
pub fn weight_deltas(c: &Circuit, cfg: &FloatConfig) -> Result<Vec<f64>, Error> {
    c.edges()
        .iter()
        .map(|e| {
            let q = cfg.encode(e.weight)?.value;
            if q.is_zero {
                Ok(0.0)
            } else {
                Ok(mitchell_delta(cfg.fraction(&q))?)
            }
        })
        .collect()
}

/// `Σ_w Δ_w * mass(w)`.
pub fn delta_det(c: &Circuit, cfg: &FloatConfig) -> Result<AnalysisReport, Error> {
    let deltas = weight_deltas(c, cfg)?;
    let masses = edge_masses(c);
    let contributions: Vec<WeightContribution> = deltas
        .iter()
        .zip(&masses)
        .enumerate()
        .map(|(i, (d, m))| WeightContribution {
            edge: EdgeId(i),
            delta_w: *d,
            mass: *m,
            contribution: d * m,
        })
        .collect();
    let structure = validate(c);
    Ok(AnalysisReport {
        delta_det: contributions.iter().map(|w| w.contribution).sum(),
        relation: if structure.deterministic {
            Relation::Equality
        } else {
            Relation::Bound
        },
        determinism_check: structure.determinism_check,
        contributions,
        delta_dc: None,
        dc_contributions: None,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo surrogate for circuits with several positive induced trees.
///
/// For each `x ~ p`, the most probable induced tree `T1` is found with a
/// 64-bit max-product pass; the sample value is the summed `Δ_w` along `T1`
/// minus the tail `p~(x) - p~(T1)`, both evaluated with all-AAI at `cfg`.
pub fn delta_nondet_mc(
    c: &Circuit,
    cfg: &FloatConfig,
    n_samples: usize,
    seed: u64,
) -> Result<AnalysisReport, Error> {
    if n_samples < 2 {
        return Err(Error::TooFewSamples {
            got: n_samples,
            min: 2,
        });
    }
    let mut report = delta_det(c, cfg)?;
    let deltas: Vec<f64> = report.contributions.iter().map(|w| w.delta_w).collect();
    let data = sample(c, seed, n_samples)?;
    let base = Evaluator::baseline(c);
    let approx = Evaluator::new(c, *cfg, &MultiplierPlan::all_aai(c))?;

    let per_sample: Vec<(f64, Vec<EdgeId>)> = data
        .par_iter()
        .map(|x| -> Result<_, Error> {
            let ev: Vec<Option<usize>> = x.iter().map(|v| Some(*v)).collect();
            let top = base.eval_map(&ev)?;
            let edges = induced_tree_edges(c, &top.trace);
            let along: f64 = edges.iter().map(|e| deltas[e.0]).sum();
            let px = cfg.decode(&approx.eval_mar(x)?.value);
            let pt = cfg.decode(&approx.eval_induced_tree(&top.trace, &ev)?.value);
            Ok((along - (px - pt), edges))
        })
        .collect::<Result<_, _>>()?;

    let values: Vec<f64> = per_sample.iter().map(|(v, _)| *v).collect();
    let (mean, std_error) = mean_and_se(&values);
    let mut counts = vec![0usize; c.n_weight_sites()];
    for (_, edges) in &per_sample {
        for e in edges {
            counts[e.0] += 1;
        }
    }
    report.dc_contributions = Some(
        counts
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let share = *k as f64 / n_samples as f64;
                WeightContribution {
                    edge: EdgeId(i),
                    delta_w: deltas[i],
                    mass: share,
                    contribution: deltas[i] * share,
                }
            })
            .collect(),
    );
    report.delta_dc = Some(McEstimate {
        mean,
        std_error,
        n_samples,
        seed,
    });
    Ok(report)
}

/// `Σ_x p64(x) (log2 p64(x) - log2 p~(x))` with `p~` the all-AAI circuit at
/// `cfg`, by enumerating every complete state.
pub fn kl_bruteforce(c: &Circuit, cfg: &FloatConfig) -> Result<f64, Error> {
    match c.joint_state_count() {
        Some(n) if n <= EXHAUSTIVE_STATE_LIMIT => {}
        Some(n) => return Err(Error::StateSpaceTooLarge(n.to_string())),
        None => return Err(Error::StateSpaceTooLarge("more than 2^128".into())),
    }
    let base = Evaluator::baseline(c);
    let approx = Evaluator::new(c, *cfg, &MultiplierPlan::all_aai(c))?;
    let states: Vec<_> = c.states().collect();
    let terms: Vec<f64> = states
        .par_iter()
        .map(|x| -> Result<f64, Error> {
            let b = base.eval_mar(x)?;
            if b.value.is_zero {
                return Ok(0.0);
            }
            let a = approx.eval_mar(x)?;
            if a.value.is_zero {
                return Err(Error::InfiniteDivergence { state: x.clone() });
            }
            let p = base.config().decode(&b.value);
            Ok(p * (b.log2 - a.log2))
        })
        .collect::<Result<_, _>>()?;
    Ok(terms.iter().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FailureEstimate {
    pub delta_e: u64,
    pub n_mults_per_branch: usize,
    pub n_samples: usize,
    pub probability: f64,
    pub std_error: f64,
}

const FAILURE_CHUNK: usize = 1 << 14;

/// Probability that AAI flips the comparison of two branches whose exact
/// exponents differ by `delta_e`, with uniform mantissas.
///
/// Each branch multiplies `n_mults + 1` operands. The exact and AAI mantissa
/// differences are `ΔM = Σ log2(1+m_l) - Σ log2(1+m_r)` and
/// `ΔM' = Σ m_l - Σ m_r`; a failure is `(ΔE + ΔM)(ΔE + ΔM') <= 0`. The sign
/// of `delta_e` is irrelevant by symmetry.
pub fn map_failure_prob(
    delta_e: i64,
    n_mults: usize,
    n_samples: usize,
    seed: u64,
) -> Result<FailureEstimate, Error> {
    if n_samples < 10_000 {
        return Err(Error::TooFewSamples {
            got: n_samples,
            min: 10_000,
        });
    }
    if n_mults < 1 {
        return Err(Error::InvalidArgument(
            "need at least one multiplication per branch".into(),
        ));
    }
    let de = delta_e.unsigned_abs() as f64;
    let operands = n_mults + 1;
    let n_chunks = n_samples.div_ceil(FAILURE_CHUNK);
    let failures: usize = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = FAILURE_CHUNK.min(n_samples - chunk * FAILURE_CHUNK);
            let mut count = 0;
            for _ in 0..len {
                let (mut dm, mut dm_aai) = (0.0, 0.0);
                for side in [1.0, -1.0] {
                    for _ in 0..operands {
                        let m: f64 = rng.random();
                        dm += side * (1.0 + m).log2();
                        dm_aai += side * m;
                    }
                }
                if (de + dm) * (de + dm_aai) <= 0.0 {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let p = failures as f64 / n_samples as f64;
    Ok(FailureEstimate {
        delta_e: delta_e.unsigned_abs(),
        n_mults_per_branch: n_mults,
        n_samples,
        probability: p,
        std_error: (p * (1.0 - p) / n_samples as f64).sqrt(),
    })
}
