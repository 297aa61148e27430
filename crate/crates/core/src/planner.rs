// SPDX-License-Identifier: Apache-2.0

//! Greedy replacement of exact weight multipliers by AAI and error/energy
//! trade-off curves.

use crate::analysis::{delta_det, delta_nondet_mc};
use crate::circuit::{Circuit, EdgeId, Evidence};
use crate::energy::EnergyModel;
use crate::error::Error;
use crate::float::{FloatConfig, MulMode};
use crate::inference::{compare_queries, MultiplierPlan};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Number of random plans per fraction in a trade-off curve.
pub const RANDOM_SEEDS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// `Δ_w * tree mass`.
    Det,
    /// `Δ_w` times the share of sampled top induced trees using the edge.
    Dc { n_samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReplacementStep {
    pub edge: EdgeId,
    pub contribution: f64,
    /// Contribution of this and every earlier step.
    pub cumulative_contribution: f64,
    /// Normalized circuit energy once this and every earlier step is AAI.
    pub cumulative_energy_normalized: f64,
}

/// Weight sites in ascending order of contribution, ties by edge id.
pub fn rank_sites(
    c: &Circuit,
    cfg: &FloatConfig,
    criterion: Criterion,
) -> Result<Vec<ReplacementStep>, Error> {
    let contributions = match criterion {
        Criterion::Det => delta_det(c, cfg)?.contributions,
        Criterion::Dc { n_samples, seed } => delta_nondet_mc(c, cfg, n_samples, seed)?
            .dc_contributions
            .expect("surrogate attributes every edge"),
    };
    let mut order: Vec<(EdgeId, f64)> = contributions
        .iter()
        .map(|w| (w.edge, w.contribution))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let model = EnergyModel::default();
    let (e, m) = (cfg.exp_bits, cfg.man_bits);
    let exact = model.exact_power(e, m);
    let saving = exact - model.aai_power(e, m);
    let n = c.n_sites() as f64;
    let mut cum = 0.0;
    Ok(order
        .iter()
        .enumerate()
        .map(|(k, (edge, contribution))| {
            cum += contribution;
            let total = n * exact - (k + 1) as f64 * saving;
            ReplacementStep {
                edge: *edge,
                contribution: *contribution,
                cumulative_contribution: cum,
                cumulative_energy_normalized: total / n / model.baseline(),
            }
        })
        .collect())
}

fn count_for(fraction: f64, n: usize) -> Result<usize, Error> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::FractionOutOfRange(fraction));
    }
    Ok(((fraction * n as f64) + 1e-9).floor().min(n as f64) as usize)
}

/// The first `floor(fraction * n)` ranked weight sites become AAI; every
/// other site, including all product sites, stays exact.
pub fn plan(
    c: &Circuit,
    ranked: &[ReplacementStep],
    fraction: f64,
) -> Result<MultiplierPlan, Error> {
    if ranked.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let k = count_for(fraction, ranked.len())?;
    let edges: Vec<EdgeId> = ranked[..k].iter().map(|s| s.edge).collect();
    MultiplierPlan::with_aai_edges(c, &edges)
}

/// Uniformly random subset of `floor(fraction * n)` sites. Candidates are the
/// weight sites, plus the product sites when `include_products` is set.
pub fn random_plan(
    c: &Circuit,
    fraction: f64,
    seed: u64,
    include_products: bool,
) -> Result<MultiplierPlan, Error> {
    let n = if include_products {
        c.n_sites()
    } else {
        c.n_weight_sites()
    };
    let k = count_for(fraction, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = MultiplierPlan::all_exact(c);
    for site in index::sample(&mut rng, n, k).iter() {
        p.set(site, MulMode::Aai);
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Det,
    Dc { n_samples: usize, seed: u64 },
    Random { seed: u64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Det => "det",
            Strategy::Dc { .. } => "dc",
            Strategy::Random { .. } => "random",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Strategy::Det => None,
            Strategy::Dc { seed, .. } | Strategy::Random { seed } => Some(*seed),
        }
    }

    /// `k` random strategies with seeds `base, base+1, ...`.
    pub fn randoms(k: usize, base_seed: u64) -> Vec<Strategy> {
        (0..k as u64)
            .map(|i| Strategy::Random {
                seed: base_seed.wrapping_add(i),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub strategy: &'static str,
    pub seed: Option<u64>,
    pub fraction: f64,
    pub replaced_ratio_of_all_mults: f64,
    pub normalized_energy: f64,
    pub mean_log_error: f64,
}

/// One row per `(strategy, fraction)`, in that nesting order.
pub fn tradeoff_curve(
    c: &Circuit,
    cfg: &FloatConfig,
    data: &[Evidence],
    fractions: &[f64],
    strategies: &[Strategy],
) -> Result<Vec<TradeoffRow>, Error> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if c.n_weight_sites() == 0 {
        return Err(Error::EmptyRanking);
    }
    let rankings: Vec<Option<Vec<ReplacementStep>>> = strategies
        .iter()
        .map(|s| match s {
            Strategy::Det => rank_sites(c, cfg, Criterion::Det).map(Some),
            Strategy::Dc { n_samples, seed } => rank_sites(
                c,
                cfg,
                Criterion::Dc {
                    n_samples: *n_samples,
                    seed: *seed,
                },
            )
            .map(Some),
            Strategy::Random { .. } => Ok(None),
        })
        .collect::<Result<_, _>>()?;
    let cells: Vec<(usize, f64)> = (0..strategies.len())
        .flat_map(|s| fractions.iter().map(move |f| (s, *f)))
        .collect();
    let model = EnergyModel::default();
    cells
        .par_iter()
        .map(|(si, f)| {
            let s = strategies[*si];
            let p = match (&rankings[*si], s) {
                (Some(ranked), _) => plan(c, ranked, *f)?,
                (None, Strategy::Random { seed }) => random_plan(c, *f, seed, false)?,
                (None, _) => unreachable!("only random strategies lack a ranking"),
            };
            let m = compare_queries(c, data, *cfg, &p, None)?;
            let energy = model.circuit_energy(c, cfg, &p)?;
            Ok(TradeoffRow {
                strategy: s.name(),
                seed: s.seed(),
                fraction: *f,
                replaced_ratio_of_all_mults: if c.n_sites() == 0 {
                    0.0
                } else {
                    p.n_aai() as f64 / c.n_sites() as f64
                },
                normalized_energy: energy.normalized,
                mean_log_error: m.mean_log_error,
            })
        })
        .collect()
}
