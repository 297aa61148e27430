// SPDX-License-Identifier: Apache-2.0

//! MAR and MAP evaluation at a given resolution with a per-site choice of
//! exact or AAI multiplication.
//!
//! Multiplier sites are numbered as in [`Circuit`]: one site per sum edge
//! (the weight product), followed by `k - 1` sites per `k`-ary product unit
//! (the left fold over its children in id order). Sums accumulate their
//! weighted children with [`FloatConfig::exact_add`] in child-slot order.

use crate::circuit::{Assignment, Circuit, EdgeId, Evidence, Unit, UnitId};
use crate::error::Error;
use crate::float::{CustomFloat, FloatConfig, MulMode, MultResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact or AAI per multiplier site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplierPlan {
    modes: Vec<MulMode>,
}

impl MultiplierPlan {
    pub fn uniform(c: &Circuit, mode: MulMode) -> Self {
        MultiplierPlan {
            modes: vec![mode; c.n_sites()],
        }
    }

    pub fn all_exact(c: &Circuit) -> Self {
        Self::uniform(c, MulMode::Exact)
    }

    pub fn all_aai(c: &Circuit) -> Self {
        Self::uniform(c, MulMode::Aai)
    }

    pub fn from_modes(c: &Circuit, modes: Vec<MulMode>) -> Result<Self, Error> {
        if modes.len() != c.n_sites() {
            return Err(Error::PlanSize {
                expected: c.n_sites(),
                got: modes.len(),
            });
        }
        Ok(MultiplierPlan { modes })
    }

    /// All-exact except the weight sites of `edges`.
    pub fn with_aai_edges(c: &Circuit, edges: &[EdgeId]) -> Result<Self, Error> {
        let mut plan = Self::all_exact(c);
        for e in edges {
            c.edge(*e)?;
            plan.modes[e.0] = MulMode::Aai;
        }
        Ok(plan)
    }

    pub fn mode(&self, site: usize) -> MulMode {
        self.modes[site]
    }

    pub fn set(&mut self, site: usize, mode: MulMode) {
        self.modes[site] = mode;
    }

    pub fn modes(&self) -> &[MulMode] {
        &self.modes
    }

    pub fn n_sites(&self) -> usize {
        self.modes.len()
    }

    pub fn n_aai(&self) -> usize {
        self.modes.iter().filter(|m| **m == MulMode::Aai).count()
    }

    fn check(&self, c: &Circuit) -> Result<(), Error> {
        if self.modes.len() != c.n_sites() {
            return Err(Error::PlanSize {
                expected: c.n_sites(),
                got: self.modes.len(),
            });
        }
        Ok(())
    }
}

/// Root value of one evaluation with the saturation events it triggered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: CustomFloat,
    /// `log2` of the value; `-inf` when it is zero.
    pub log2: f64,
    pub underflows: u32,
    pub overflows: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapResult {
    pub assignment: Assignment,
    pub value: CustomFloat,
    pub log2_value: f64,
    /// Chosen child slot of every sum unit (indexed by unit id), `None` for
    /// other units.
    pub trace: Vec<Option<usize>>,
    pub underflows: u32,
    pub overflows: u32,
}

enum SumRule<'t> {
    Add,
    Max,
    Chosen(&'t [Option<usize>]),
}

#[derive(Default)]
struct Flags {
    underflows: u32,
    overflows: u32,
}

impl Flags {
    fn take(&mut self, r: MultResult) -> CustomFloat {
        self.underflows += r.underflowed as u32;
        self.overflows += r.overflowed as u32;
        r.value
    }
}

/// Quantized circuit ready for repeated evaluation under one configuration
/// and plan. Weights are encoded once with the configuration's rounding.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    c: &'a Circuit,
    cfg: FloatConfig,
    plan: MultiplierPlan,
    weights: Vec<CustomFloat>,
    one: CustomFloat,
    weight_underflows: u32,
    weight_overflows: u32,
}

impl<'a> Evaluator<'a> {
    pub fn new(c: &'a Circuit, cfg: FloatConfig, plan: &MultiplierPlan) -> Result<Self, Error> {
        plan.check(c)?;
        let mut weights = Vec::with_capacity(c.n_weight_sites());
        let (mut wu, mut wo) = (0, 0);
        for e in c.edges() {
            let r = cfg.encode(e.weight)?;
            wu += r.underflowed as u32;
            wo += r.overflowed as u32;
            weights.push(r.value);
        }
        let one = cfg.one();
        Ok(Evaluator {
            c,
            cfg,
            plan: plan.clone(),
            weights,
            one: one.value,
            weight_underflows: wu + one.underflowed as u32,
            weight_overflows: wo + one.overflowed as u32,
        })
    }

    /// The 64-bit all-exact reference (E=11, M=52).
    pub fn baseline(c: &'a Circuit) -> Self {
        Evaluator::new(c, FloatConfig::double(), &MultiplierPlan::all_exact(c))
            .expect("baseline plan matches its circuit")
    }

    pub fn config(&self) -> &FloatConfig {
        &self.cfg
    }

    pub fn plan(&self) -> &MultiplierPlan {
        &self.plan
    }

    pub fn circuit(&self) -> &Circuit {
        self.c
    }

    /// Quantized weight of every edge.
    pub fn weights(&self) -> &[CustomFloat] {
        &self.weights
    }

    /// Saturation events while quantizing the weights (and the constant one).
    pub fn quantization_flags(&self) -> (u32, u32) {
        (self.weight_underflows, self.weight_overflows)
    }

    fn upward(
        &self,
        leaf: impl Fn(usize, usize) -> bool,
        rule: SumRule<'_>,
        mut choices: Option<&mut Vec<Option<usize>>>,
    ) -> (Vec<CustomFloat>, Flags) {
        let c = self.c;
        let cfg = &self.cfg;
        let mut vals = vec![CustomFloat::ZERO; c.units().len()];
        let mut flags = Flags::default();
        for u in c.topological_order() {
            vals[u.0] = match c.unit(*u) {
                Unit::Indicator { var, value } => {
                    if leaf(*var, *value) {
                        self.one
                    } else {
                        CustomFloat::ZERO
                    }
                }
                Unit::Product { children } => {
                    let mut acc = vals[children[0].0];
                    for (k, ch) in children[1..].iter().enumerate() {
                        let mode = self.plan.mode(c.product_site(*u, k));
                        acc = flags.take(cfg.mul(mode, &acc, &vals[ch.0]));
                    }
                    acc
                }
                Unit::Sum { children, .. } => {
                    let term = |slot: usize, flags: &mut Flags| {
                        let e = c.edge_id(*u, slot);
                        let mode = self.plan.mode(e.0);
                        flags.take(cfg.mul(mode, &self.weights[e.0], &vals[children[slot].0]))
                    };
                    match &rule {
                        SumRule::Add => {
                            let mut acc = CustomFloat::ZERO;
                            for slot in 0..children.len() {
                                let t = term(slot, &mut flags);
                                acc = flags.take(cfg.exact_add(&acc, &t));
                            }
                            acc
                        }
                        SumRule::Max => {
                            let mut best = term(0, &mut flags);
                            let mut arg = 0;
                            for slot in 1..children.len() {
                                let t = term(slot, &mut flags);
                                if t.cmp_magnitude(&best).is_gt() {
                                    best = t;
                                    arg = slot;
                                }
                            }
                            if let Some(ch) = choices.as_deref_mut() {
                                ch[u.0] = Some(arg);
                            }
                            best
                        }
                        SumRule::Chosen(chosen) => match chosen[u.0] {
                            Some(slot) => term(slot, &mut flags),
                            None => CustomFloat::ZERO,
                        },
                    }
                }
            };
        }
        (vals, flags)
    }

    fn finish(&self, v: CustomFloat, flags: Flags) -> Evaluation {
        Evaluation {
            value: v,
            log2: self.cfg.log2(&v),
            underflows: flags.underflows,
            overflows: flags.overflows,
        }
    }

    /// Probability of a complete assignment.
    pub fn eval_mar(&self, x: &[usize]) -> Result<Evaluation, Error> {
        self.c.check_assignment(x)?;
        let (vals, flags) = self.upward(|var, value| x[var] == value, SumRule::Add, None);
        Ok(self.finish(vals[self.c.root().0], flags))
    }

    /// Max-product upward pass with back-tracking. Unobserved variables have
    /// both indicators at one; ties go to the lowest child slot.
    pub fn eval_map(&self, evidence: &[Option<usize>]) -> Result<MapResult, Error> {
        let c = self.c;
        c.check_evidence(evidence)?;
        let mut trace = vec![None; c.units().len()];
        let leaf = |var: usize, value: usize| evidence[var].is_none_or(|v| v == value);
        let (vals, flags) = self.upward(leaf, SumRule::Max, Some(&mut trace));
        let assignment = backtrack(c, &trace, evidence)?;
        let value = vals[c.root().0];
        Ok(MapResult {
            assignment,
            value,
            log2_value: self.cfg.log2(&value),
            trace,
            underflows: flags.underflows,
            overflows: flags.overflows,
        })
    }

    /// Value of the induced tree selected by `trace` (one slot per sum),
    /// with indicators set from `evidence`.
    pub fn eval_induced_tree(
        &self,
        trace: &[Option<usize>],
        evidence: &[Option<usize>],
    ) -> Result<Evaluation, Error> {
        let c = self.c;
        c.check_evidence(evidence)?;
        if trace.len() != c.units().len() {
            return Err(Error::InvalidArgument(format!(
                "trace has {} entries, circuit has {} units",
                trace.len(),
                c.units().len()
            )));
        }
        let leaf = |var: usize, value: usize| evidence[var].is_none_or(|v| v == value);
        let (vals, flags) = self.upward(leaf, SumRule::Chosen(trace), None);
        Ok(self.finish(vals[c.root().0], flags))
    }
}

/// Follows the recorded choices from the root: sums descend into their chosen
/// child, products into all children, indicators set their variable.
/// Observed variables keep their evidence value, which only matters when the
/// evidence has probability zero and every branch ties at zero.
fn backtrack(
    c: &Circuit,
    trace: &[Option<usize>],
    evidence: &[Option<usize>],
) -> Result<Assignment, Error> {
    let mut x: Vec<Option<usize>> = vec![None; c.n_vars()];
    let mut stack = vec![c.root()];
    while let Some(u) = stack.pop() {
        match c.unit(u) {
            Unit::Indicator { var, .. } if evidence[*var].is_some() => {}
            Unit::Indicator { var, value } => match x[*var] {
                Some(v) if v != *value => {
                    return Err(crate::circuit::CircuitError::Conflict { var: *var }.into())
                }
                _ => x[*var] = Some(*value),
            },
            Unit::Product { children } => stack.extend(children.iter().rev()),
            Unit::Sum { children, .. } => stack.push(children[trace[u.0].unwrap_or(0)]),
        }
    }
    x.iter()
        .zip(evidence)
        .enumerate()
        .map(|(var, (v, e))| {
            e.or(*v)
                .ok_or_else(|| crate::circuit::CircuitError::Unassigned(var).into())
        })
        .collect()
}

/// Edges of the induced tree selected by `trace`, in edge order.
pub fn induced_tree_edges(c: &Circuit, trace: &[Option<usize>]) -> Vec<EdgeId> {
    let mut edges = Vec::new();
    let mut seen = vec![false; c.units().len()];
    let mut stack: Vec<UnitId> = vec![c.root()];
    while let Some(u) = stack.pop() {
        if std::mem::replace(&mut seen[u.0], true) {
            continue;
        }
        match c.unit(u) {
            Unit::Sum { children, .. } => {
                let slot = trace[u.0].unwrap_or(0);
                edges.push(c.edge_id(u, slot));
                stack.push(children[slot]);
            }
            Unit::Product { children } => stack.extend(children.iter()),
            Unit::Indicator { .. } => {}
        }
    }
    edges.sort();
    edges
}

pub fn eval_mar(
    c: &Circuit,
    x: &[usize],
    cfg: FloatConfig,
    plan: &MultiplierPlan,
) -> Result<Evaluation, Error> {
    Evaluator::new(c, cfg, plan)?.eval_mar(x)
}

pub fn eval_map(
    c: &Circuit,
    evidence: &[Option<usize>],
    cfg: FloatConfig,
    plan: &MultiplierPlan,
) -> Result<MapResult, Error> {
    Evaluator::new(c, cfg, plan)?.eval_map(evidence)
}

/// Complete assignments as fully observed evidence rows.
pub fn as_evidence(data: &[Assignment]) -> Vec<Evidence> {
    data.iter()
        .map(|x| x.iter().map(|v| Some(*v)).collect())
        .collect()
}

/// Hides each variable independently with probability `p_hidden`. Row `i`
/// draws from stream `i` of a ChaCha8 generator seeded with `seed`.
pub fn mask_evidence(
    data: &[Assignment],
    p_hidden: f64,
    seed: u64,
) -> Result<Vec<Evidence>, Error> {
    if !(0.0..=1.0).contains(&p_hidden) {
        return Err(Error::InvalidArgument(format!(
            "hidden probability {p_hidden} is outside [0, 1]"
        )));
    }
    Ok(data
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            x.iter()
                .map(|v| (!rng.random_bool(p_hidden)).then_some(*v))
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UndefinedInstance {
    pub instance: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryMetrics {
    pub n_instances: usize,
    /// Complete rows that entered the MAR error.
    pub n_mar: usize,
    /// Mean of `|log2 p64(x) - (log2 p~(x) + log2 eps)|` over complete rows
    /// with a defined baseline; `NaN` when there are none and `inf` when an
    /// approximate value underflowed to zero.
    pub mean_log_error: f64,
    /// Share of rows whose MAP assignment equals the baseline's.
    pub map_accuracy: f64,
    pub underflow_count: u64,
    pub overflow_count: u64,
    /// Complete rows excluded from the MAR error because the baseline is zero
    /// or underflowed there.
    pub undefined: Vec<UndefinedInstance>,
}

/// Compares an evaluator against the 64-bit exact baseline.
///
/// Every row is used as MAP evidence. Complete rows are also MAR queries.
pub fn compare_queries(
    c: &Circuit,
    data: &[Evidence],
    cfg: FloatConfig,
    plan: &MultiplierPlan,
    log2_epsilon: Option<f64>,
) -> Result<QueryMetrics, Error> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let approx = Evaluator::new(c, cfg, plan)?;
    let base = Evaluator::baseline(c);
    let corr = log2_epsilon.unwrap_or(0.0);

    struct Row {
        mar: Option<Result<f64, String>>,
        map_hit: bool,
        underflows: u32,
        overflows: u32,
    }

    let rows: Vec<Row> = data
        .par_iter()
        .map(|e| -> Result<Row, Error> {
            let mut underflows = 0;
            let mut overflows = 0;
            let mar = if e.iter().all(Option::is_some) {
                let x: Assignment = e.iter().map(|v| v.unwrap()).collect();
                let b = base.eval_mar(&x)?;
                let a = approx.eval_mar(&x)?;
                underflows += a.underflows;
                overflows += a.overflows;
                if b.value.is_zero || b.underflows > 0 {
                    let why = if b.underflows > 0 {
                        "baseline underflowed"
                    } else {
                        "baseline probability is zero"
                    };
                    Some(Err(why.to_string()))
                } else if a.value.is_zero {
                    Some(Ok(f64::INFINITY))
                } else {
                    Some(Ok((b.log2 - (a.log2 + corr)).abs()))
                }
            } else {
                None
            };
            let bm = base.eval_map(e)?;
            let am = approx.eval_map(e)?;
            underflows += am.underflows;
            overflows += am.overflows;
            Ok(Row {
                mar,
                map_hit: bm.assignment == am.assignment,
                underflows,
                overflows,
            })
        })
        .collect::<Result<_, _>>()?;

    let (qu, qo) = approx.quantization_flags();
    let mut m = QueryMetrics {
        n_instances: data.len(),
        n_mar: 0,
        mean_log_error: 0.0,
        map_accuracy: 0.0,
        underflow_count: qu as u64,
        overflow_count: qo as u64,
        undefined: Vec::new(),
    };
    let mut total = 0.0;
    let mut hits = 0usize;
    for (i, r) in rows.iter().enumerate() {
        m.underflow_count += r.underflows as u64;
        m.overflow_count += r.overflows as u64;
        hits += r.map_hit as usize;
        match &r.mar {
            Some(Ok(err)) => {
                total += err;
                m.n_mar += 1;
            }
            Some(Err(reason)) => m.undefined.push(UndefinedInstance {
                instance: i,
                reason: reason.clone(),
            }),
            None => {}
        }
    }
    m.mean_log_error = if m.n_mar == 0 {
        f64::NAN
    } else {
        total / m.n_mar as f64
    };
    m.map_accuracy = hits as f64 / data.len() as f64;
    Ok(m)
}
