// SPDX-License-Identifier: Apache-2.0

//! Smoothness, decomposability and determinism checks.

use super::{Circuit, Unit, UnitId, EXHAUSTIVE_STATE_LIMIT};
use serde::Serialize;

/// How determinism was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeterminismCheck {
    /// Every complete state was enumerated.
    Exhaustive,
    /// Disjoint indicator supports between sibling sub-circuits; sufficient
    /// but not necessary.
    Syntactic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub unit: UnitId,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub smooth: bool,
    pub decomposable: bool,
    pub deterministic: bool,
    pub determinism_check: DeterminismCheck,
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn is_smooth_decomposable(&self) -> bool {
        self.smooth && self.decomposable
    }
}

pub fn validate(c: &Circuit) -> StructureReport {
    let mut violations = Vec::new();
    let mut smooth = true;
    let mut decomposable = true;

    for (id, unit) in c.units().iter().enumerate() {
        match unit {
            Unit::Sum { children, .. } => {
                let first = c.scope(children[0]);
                if let Some(other) = children.iter().find(|ch| c.scope(**ch) != first) {
                    smooth = false;
                    violations.push(Violation {
                        unit: UnitId(id),
                        reason: format!(
                            "not smooth: child {} has scope {:?}, child {} has scope {:?}",
                            children[0].0,
                            first,
                            other.0,
                            c.scope(*other)
                        ),
                    });
                }
            }
            Unit::Product { children } => {
                let mut seen: Vec<usize> = Vec::new();
                let mut clash = None;
                for ch in children {
                    for v in c.scope(*ch) {
                        if seen.contains(v) {
                            clash = Some(*v);
                        }
                    }
                    seen.extend_from_slice(c.scope(*ch));
                }
                if let Some(v) = clash {
                    decomposable = false;
                    violations.push(Violation {
                        unit: UnitId(id),
                        reason: format!("not decomposable: variable {v} shared by children"),
                    });
                }
            }
            Unit::Indicator { .. } => {}
        }
    }

    let exhaustive = c
        .joint_state_count()
        .map(|n| n <= EXHAUSTIVE_STATE_LIMIT)
        .unwrap_or(false);
    let (deterministic, determinism_check) = if exhaustive {
        (
            exhaustive_determinism(c, &mut violations),
            DeterminismCheck::Exhaustive,
        )
    } else {
        (
            syntactic_determinism(c, &mut violations),
            DeterminismCheck::Syntactic,
        )
    };

    StructureReport {
        smooth,
        decomposable,
        deterministic,
        determinism_check,
        violations,
    }
}

fn exhaustive_determinism(c: &Circuit, violations: &mut Vec<Violation>) -> bool {
    let n = c.units().len();
    let mut flagged = vec![false; n];
    let mut positive = vec![false; n];
    for x in c.states() {
        for u in c.topological_order() {
            positive[u.0] = match c.unit(*u) {
                Unit::Indicator { var, value } => x[*var] == *value,
                Unit::Product { children } => children.iter().all(|ch| positive[ch.0]),
                Unit::Sum { children, .. } => children.iter().any(|ch| positive[ch.0]),
            };
            if let Unit::Sum { children, .. } = c.unit(*u) {
                if !flagged[u.0] && children.iter().filter(|ch| positive[ch.0]).count() > 1 {
                    flagged[u.0] = true;
                    violations.push(Violation {
                        unit: *u,
                        reason: format!("not deterministic: several children positive at {x:?}"),
                    });
                }
            }
        }
    }
    !flagged.iter().any(|f| *f)
}

/// Per unit and variable, the set of states under which the unit can be
/// positive (an over-approximation of its support).
fn supports(c: &Circuit) -> Vec<Vec<(usize, Vec<bool>)>> {
    let cards: Vec<usize> = c.variables().iter().map(|v| v.cardinality).collect();
    let mut sup: Vec<Vec<(usize, Vec<bool>)>> = vec![Vec::new(); c.units().len()];
    for u in c.topological_order() {
        let s = match c.unit(*u) {
            Unit::Indicator { var, value } => {
                let mut allowed = vec![false; cards[*var]];
                allowed[*value] = true;
                vec![(*var, allowed)]
            }
            unit => {
                let is_sum = matches!(unit, Unit::Sum { .. });
                c.scope(*u)
                    .iter()
                    .map(|&v| {
                        let mut allowed = vec![!is_sum; cards[v]];
                        for ch in unit.children() {
                            let child_allowed = sup[ch.0].iter().find(|(var, _)| *var == v);
                            if let Some((_, a)) = child_allowed {
                                for (slot, ok) in allowed.iter_mut().zip(a) {
                                    if is_sum {
                                        *slot |= *ok;
                                    } else {
                                        *slot &= *ok;
                                    }
                                }
                            } else if is_sum {
                                // Child does not mention v: any state possible.
                                allowed.iter_mut().for_each(|s| *s = true);
                            }
                        }
                        (v, allowed)
                    })
                    .collect()
            }
        };
        sup[u.0] = s;
    }
    sup
}

fn syntactic_determinism(c: &Circuit, violations: &mut Vec<Violation>) -> bool {
    let sup = supports(c);
    let disjoint = |a: usize, b: usize| {
        sup[a].iter().any(|(v, sa)| {
            sup[b]
                .iter()
                .find(|(w, _)| w == v)
                .map(|(_, sb)| sa.iter().zip(sb).all(|(x, y)| !(*x && *y)))
                .unwrap_or(false)
        })
    };
    let mut ok = true;
    for (id, unit) in c.units().iter().enumerate() {
        if let Unit::Sum { children, .. } = unit {
            'pairs: for i in 0..children.len() {
                for j in i + 1..children.len() {
                    if !disjoint(children[i].0, children[j].0) {
                        ok = false;
                        violations.push(Violation {
                            unit: UnitId(id),
                            reason: format!(
                                "determinism unverified: children {} and {} have overlapping \
                                 indicator supports (syntactic check only)",
                                children[i].0, children[j].0
                            ),
                        });
                        break 'pairs;
                    }
                }
            }
        }
    }
    ok
}
