// SPDX-License-Identifier: Apache-2.0

//! Parsers for bit lists, plan sources and correction sources.

use crate::io::{read_text, CliError, Result};
use aaipc::correction::{closed_form_log_epsilon_det, estimate_log_epsilon, CorrectionTerm};
use aaipc::planner::{plan, random_plan, rank_sites, Criterion};
use aaipc::{Circuit, FloatConfig, MultiplierPlan};
use std::fmt;
use std::path::PathBuf;

/// Comma-separated integers and inclusive ranges, e.g. `8..11` or `2,4,8..10`.
pub fn parse_list(text: &str) -> std::result::Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u32 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad range `{part}`"))?;
            let b: u32 = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| format!("bad range `{part}`"))?;
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad integer `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

pub fn parse_fractions(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad fraction `{s}`"))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlanSource {
    AllExact,
    AllAai,
    Greedy { fraction: f64, criterion: Criterion },
    Random { fraction: f64, seed: u64 },
    File(PathBuf),
}

impl PlanSource {
    /// Builds the plan for one resolution; greedy rankings depend on it.
    pub fn build(&self, c: &Circuit, cfg: &FloatConfig) -> Result<MultiplierPlan> {
        Ok(match self {
            PlanSource::AllExact => MultiplierPlan::all_exact(c),
            PlanSource::AllAai => MultiplierPlan::all_aai(c),
            PlanSource::Greedy {
                fraction,
                criterion,
            } => plan(c, &rank_sites(c, cfg, *criterion)?, *fraction)?,
            PlanSource::Random { fraction, seed } => random_plan(c, *fraction, *seed, false)?,
            PlanSource::File(p) => {
                let text = read_text(p)?;
                let plan: MultiplierPlan = serde_json::from_str(&text)
                    .map_err(|e| CliError::parse(format!("{}: {e}", p.display())))?;
                if plan.n_sites() != c.n_sites() {
                    return Err(aaipc::Error::PlanSize {
                        expected: c.n_sites(),
                        got: plan.n_sites(),
                    }
                    .into());
                }
                plan
            }
        })
    }
}

impl std::str::FromStr for PlanSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let fraction = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| format!("bad fraction `{t}` in plan `{s}`"))
        };
        let int = |t: &str| {
            t.parse::<u64>()
                .map_err(|_| format!("bad integer `{t}` in plan `{s}`"))
        };
        match parts.as_slice() {
            ["all-exact"] | ["exact"] => Ok(PlanSource::AllExact),
            ["all-aai"] | ["aai"] => Ok(PlanSource::AllAai),
            ["greedy", f] | ["greedy", f, "det"] => Ok(PlanSource::Greedy {
                fraction: fraction(f)?,
                criterion: Criterion::Det,
            }),
            ["greedy", f, "dc", n, seed] => Ok(PlanSource::Greedy {
                fraction: fraction(f)?,
                criterion: Criterion::Dc {
                    n_samples: int(n)? as usize,
                    seed: int(seed)?,
                },
            }),
            ["random", f, seed] => Ok(PlanSource::Random {
                fraction: fraction(f)?,
                seed: int(seed)?,
            }),
            _ if s.ends_with(".json") => Ok(PlanSource::File(PathBuf::from(s))),
            _ => Err(format!(
                "unknown plan `{s}`; expected all-exact, all-aai, greedy:F, greedy:F:dc:N:SEED, random:F:SEED or a .json file"
            )),
        }
    }
}

impl fmt::Display for PlanSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanSource::AllExact => write!(f, "all-exact"),
            PlanSource::AllAai => write!(f, "all-aai"),
            PlanSource::Greedy {
                fraction,
                criterion: Criterion::Det,
            } => write!(f, "greedy:{fraction}"),
            PlanSource::Greedy {
                fraction,
                criterion: Criterion::Dc { n_samples, seed },
            } => write!(f, "greedy:{fraction}:dc:{n_samples}:{seed}"),
            PlanSource::Random { fraction, seed } => write!(f, "random:{fraction}:{seed}"),
            PlanSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorrectionSource {
    None,
    Mc { n: usize, seed: u64 },
    ClosedForm,
    File(PathBuf),
}

impl CorrectionSource {
    pub fn build(
        &self,
        c: &Circuit,
        cfg: FloatConfig,
        plan: &MultiplierPlan,
    ) -> Result<CorrectionTerm> {
        Ok(match self {
            CorrectionSource::None => CorrectionTerm::NONE,
            CorrectionSource::Mc { n, seed } => estimate_log_epsilon(c, cfg, plan, *n, *seed)?,
            CorrectionSource::ClosedForm => {
                if *plan != MultiplierPlan::all_aai(c) {
                    return Err(CliError::domain(
                        "closed-form correction describes the all-AAI plan only",
                    ));
                }
                closed_form_log_epsilon_det(c, &cfg)?
            }
            CorrectionSource::File(p) => CorrectionTerm::from_json(&read_text(p)?)
                .map_err(|e| CliError::parse(format!("{}: {e}", p.display())))?,
        })
    }
}

impl std::str::FromStr for CorrectionSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["none"] => Ok(CorrectionSource::None),
            ["closed-form"] => Ok(CorrectionSource::ClosedForm),
            ["mc", n, seed] => Ok(CorrectionSource::Mc {
                n: n.parse().map_err(|_| format!("bad sample count `{n}`"))?,
                seed: seed.parse().map_err(|_| format!("bad seed `{seed}`"))?,
            }),
            _ if s.ends_with(".json") => Ok(CorrectionSource::File(PathBuf::from(s))),
            _ => Err(format!(
                "unknown correction `{s}`; expected none, mc:N:SEED, closed-form or a .json file"
            )),
        }
    }
}

impl fmt::Display for CorrectionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrectionSource::None => write!(f, "none"),
            CorrectionSource::Mc { n, seed } => write!(f, "mc:{n}:{seed}"),
            CorrectionSource::ClosedForm => write!(f, "closed-form"),
            CorrectionSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}
