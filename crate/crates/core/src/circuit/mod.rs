// SPDX-License-Identifier: Apache-2.0

//! Probabilistic circuits over discrete variables with indicator leaves.
//!
//! A [`Circuit`] is immutable once built. Construction checks that the graph
//! is a DAG rooted at `root`, that every unit is reachable, and that sum
//! weights are normalized; it also computes scopes, a deterministic
//! topological order and the layout of multiplier sites used by the
//! inference engine.

mod analytics;
mod generate;
mod json;
mod sample;
mod structure;

pub use analytics::{edge_masses, min_positive_value, weight_tree_mass};
pub use generate::{generate_random_deterministic_pc, generate_random_tree_pc};
pub use json::{parse_circuit, to_json};
pub use sample::sample;
pub use structure::{validate, DeterminismCheck, StructureReport, Violation};

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use thiserror::Error;

/// Sum weights must add to one within this tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Joint state spaces up to this size are enumerated exhaustively.
pub const EXHAUSTIVE_STATE_LIMIT: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitId(pub usize);

/// Index of a `(sum unit, child slot)` edge; edges are numbered by unit id,
/// then by slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A complete assignment: one state per variable.
pub type Assignment = Vec<usize>;

/// A partial assignment; `None` marks an unobserved variable.
pub type Evidence = Vec<Option<usize>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("malformed circuit document: {0}")]
    Malformed(String),
    #[error("variable ids must be dense 0..d-1; found id {0} at position {1}")]
    VariableIds(usize, usize),
    #[error("variable {0} has cardinality {1}, need at least 2")]
    Cardinality(usize, usize),
    #[error("unit ids must be dense 0..n-1; found id {0} at position {1}")]
    UnitIds(usize, usize),
    #[error("unit {unit}: child {child} does not exist")]
    DanglingChild { unit: usize, child: usize },
    #[error("root {0} does not exist")]
    DanglingRoot(usize),
    #[error("cycle through unit {0}")]
    Cycle(usize),
    #[error("unit {0} is not reachable from the root")]
    Unreachable(usize),
    #[error("sum unit {unit}: weights sum to {sum}, expected 1")]
    WeightSum { unit: usize, sum: f64 },
    #[error("sum unit {unit}: invalid weight `{weight}`")]
    BadWeight { unit: usize, weight: String },
    #[error("sum unit {unit}: {children} children but {weights} weights")]
    WeightCount {
        unit: usize,
        children: usize,
        weights: usize,
    },
    #[error("unit {0}: sum needs at least one child")]
    EmptySum(usize),
    #[error("unit {0}: product needs at least two children")]
    ShortProduct(usize),
    #[error("indicator unit {unit}: ({var}, {value}) is not a valid variable state")]
    BadIndicator {
        unit: usize,
        var: usize,
        value: usize,
    },
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("all-zero circuit: no positive root value")]
    AllZero,
    #[error("variable {0} is not assigned")]
    Unassigned(usize),
    #[error("variable {var} assigned twice while sampling (non-decomposable product)")]
    Conflict { var: usize },
    #[error("assignment has {got} entries, circuit has {expected} variables")]
    AssignmentLength { got: usize, expected: usize },
    #[error("variable {var}: state {value} out of range")]
    StateOutOfRange { var: usize, value: usize },
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: usize,
    pub cardinality: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Unit {
    Sum {
        children: Vec<UnitId>,
        weights: Vec<f64>,
    },
    Product {
        children: Vec<UnitId>,
    },
    Indicator {
        var: usize,
        value: usize,
    },
}

impl Unit {
    pub fn children(&self) -> &[UnitId] {
        match self {
            Unit::Sum { children, .. } | Unit::Product { children } => children,
            Unit::Indicator { .. } => &[],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Unit::Sum { .. } => "sum",
            Unit::Product { .. } => "product",
            Unit::Indicator { .. } => "indicator",
        }
    }
}

/// One weighted edge of a sum unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub sum: UnitId,
    pub slot: usize,
    pub child: UnitId,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    variables: Vec<Variable>,
    units: Vec<Unit>,
    root: UnitId,
    scopes: Vec<Vec<usize>>,
    order: Vec<UnitId>,
    edges: Vec<Edge>,
    /// First edge of each sum unit (unused for other kinds).
    edge_start: Vec<usize>,
    /// First product site of each product unit, counted after all edges.
    product_start: Vec<usize>,
    n_sites: usize,
}

impl Circuit {
    /// Builds and checks a circuit. Product children are stored in id order,
    /// which fixes the left fold used for n-ary products.
    pub fn new(
        variables: Vec<Variable>,
        mut units: Vec<Unit>,
        root: UnitId,
    ) -> Result<Self, CircuitError> {
        for (pos, v) in variables.iter().enumerate() {
            if v.id != pos {
                return Err(CircuitError::VariableIds(v.id, pos));
            }
            if v.cardinality < 2 {
                return Err(CircuitError::Cardinality(v.id, v.cardinality));
            }
        }
        let n = units.len();
        if root.0 >= n {
            return Err(CircuitError::DanglingRoot(root.0));
        }
        for (id, unit) in units.iter_mut().enumerate() {
            for c in unit.children() {
                if c.0 >= n {
                    return Err(CircuitError::DanglingChild {
                        unit: id,
                        child: c.0,
                    });
                }
            }
            match unit {
                Unit::Sum { children, weights } => {
                    if children.is_empty() {
                        return Err(CircuitError::EmptySum(id));
                    }
                    if children.len() != weights.len() {
                        return Err(CircuitError::WeightCount {
                            unit: id,
                            children: children.len(),
                            weights: weights.len(),
                        });
                    }
                    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
                        return Err(CircuitError::BadWeight {
                            unit: id,
                            weight: w.to_string(),
                        });
                    }
                    let sum: f64 = weights.iter().sum();
                    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                        return Err(CircuitError::WeightSum { unit: id, sum });
                    }
                }
                Unit::Product { children } => {
                    if children.len() < 2 {
                        return Err(CircuitError::ShortProduct(id));
                    }
                    children.sort();
                }
                Unit::Indicator { var, value } => {
                    let ok = variables
                        .get(*var)
                        .map(|v| *value < v.cardinality)
                        .unwrap_or(false);
                    if !ok {
                        return Err(CircuitError::BadIndicator {
                            unit: id,
                            var: *var,
                            value: *value,
                        });
                    }
                }
            }
        }

        let order = topological_sort(&units)?;

        let mut reachable = vec![false; n];
        reachable[root.0] = true;
        for u in order.iter().rev() {
            if reachable[u.0] {
                for c in units[u.0].children() {
                    reachable[c.0] = true;
                }
            }
        }
        if let Some(u) = reachable.iter().position(|r| !r) {
            return Err(CircuitError::Unreachable(u));
        }

        let mut scopes: Vec<Vec<usize>> = vec![Vec::new(); n];
        for u in &order {
            let scope = match &units[u.0] {
                Unit::Indicator { var, .. } => vec![*var],
                unit => {
                    let mut s: Vec<usize> = unit
                        .children()
                        .iter()
                        .flat_map(|c| scopes[c.0].iter().copied())
                        .collect();
                    s.sort_unstable();
                    s.dedup();
                    s
                }
            };
            scopes[u.0] = scope;
        }

        let mut edges = Vec::new();
        let mut edge_start = vec![0; n];
        for (id, unit) in units.iter().enumerate() {
            edge_start[id] = edges.len();
            if let Unit::Sum { children, weights } = unit {
                for (slot, (c, w)) in children.iter().zip(weights).enumerate() {
                    edges.push(Edge {
                        sum: UnitId(id),
                        slot,
                        child: *c,
                        weight: *w,
                    });
                }
            }
        }
        let mut product_start = vec![0; n];
        let mut next = edges.len();
        for (id, unit) in units.iter().enumerate() {
            product_start[id] = next;
            if let Unit::Product { children } = unit {
                next += children.len() - 1;
            }
        }

        Ok(Circuit {
            variables,
            units,
            root,
            scopes,
            order,
            edges,
            edge_start,
            product_start,
            n_sites: next,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, id: UnitId) -> &Unit {
        &self.units[id.0]
    }

    pub fn root(&self) -> UnitId {
        self.root
    }

    pub fn scope(&self, id: UnitId) -> &[usize] {
        &self.scopes[id.0]
    }

    /// Children before parents; ties broken by smallest unit id.
    pub fn topological_order(&self) -> &[UnitId] {
        &self.order
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Edge, CircuitError> {
        self.edges.get(id.0).ok_or(CircuitError::UnknownEdge(id.0))
    }

    /// Edge id of `slot` in sum unit `sum`.
    pub fn edge_id(&self, sum: UnitId, slot: usize) -> EdgeId {
        EdgeId(self.edge_start[sum.0] + slot)
    }

    /// Multiplier site of the `k`-th binary multiplication (0-based) of a
    /// product unit. Weight sites occupy `0..n_edges`, so this is also the
    /// global site index.
    pub fn product_site(&self, unit: UnitId, k: usize) -> usize {
        self.product_start[unit.0] + k
    }

    pub fn n_weight_sites(&self) -> usize {
        self.edges.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_sums(&self) -> usize {
        self.count(|u| matches!(u, Unit::Sum { .. }))
    }

    pub fn n_products(&self) -> usize {
        self.count(|u| matches!(u, Unit::Product { .. }))
    }

    pub fn n_indicators(&self) -> usize {
        self.count(|u| matches!(u, Unit::Indicator { .. }))
    }

    fn count(&self, f: impl Fn(&Unit) -> bool) -> usize {
        self.units.iter().filter(|u| f(u)).count()
    }

    /// Size of the joint state space, `None` when it does not fit in `u128`.
    pub fn joint_state_count(&self) -> Option<u128> {
        self.variables
            .iter()
            .try_fold(1u128, |acc, v| acc.checked_mul(v.cardinality as u128))
    }

    /// Every complete assignment in lexicographic order (last variable
    /// fastest). Intended for small circuits.
    pub fn states(&self) -> StateIter {
        StateIter {
            cards: self.variables.iter().map(|v| v.cardinality).collect(),
            next: Some(vec![0; self.variables.len()]),
        }
    }

    pub fn check_assignment(&self, x: &[usize]) -> Result<(), CircuitError> {
        if x.len() != self.variables.len() {
            return Err(CircuitError::AssignmentLength {
                got: x.len(),
                expected: self.variables.len(),
            });
        }
        for (var, (&value, v)) in x.iter().zip(&self.variables).enumerate() {
            if value >= v.cardinality {
                return Err(CircuitError::StateOutOfRange { var, value });
            }
        }
        Ok(())
    }

    pub fn check_evidence(&self, e: &[Option<usize>]) -> Result<(), CircuitError> {
        if e.len() != self.variables.len() {
            return Err(CircuitError::AssignmentLength {
                got: e.len(),
                expected: self.variables.len(),
            });
        }
        for (var, (value, v)) in e.iter().zip(&self.variables).enumerate() {
            if let Some(value) = value {
                if *value >= v.cardinality {
                    return Err(CircuitError::StateOutOfRange { var, value: *value });
                }
            }
        }
        Ok(())
    }

    /// Plain `f64` evaluation with the unquantized weights.
    pub fn eval_f64(&self, x: &[usize]) -> f64 {
        self.eval_f64_with(|var, value| x[var] == value)
    }

    /// `f64` evaluation with an arbitrary indicator function.
    pub fn eval_f64_with(&self, indicator: impl Fn(usize, usize) -> bool) -> f64 {
        let mut vals = vec![0.0; self.units.len()];
        for u in &self.order {
            vals[u.0] = match &self.units[u.0] {
                Unit::Indicator { var, value } => {
                    if indicator(*var, *value) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Unit::Product { children } => children.iter().map(|c| vals[c.0]).product(),
                Unit::Sum { children, weights } => children
                    .iter()
                    .zip(weights)
                    .map(|(c, w)| w * vals[c.0])
                    .sum(),
            };
        }
        vals[self.root.0]
    }
}

pub struct StateIter {
    cards: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for StateIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.cards[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

fn topological_sort(units: &[Unit]) -> Result<Vec<UnitId>, CircuitError> {
    let n = units.len();
    let mut pending = vec![0usize; n];
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, unit) in units.iter().enumerate() {
        for c in unit.children() {
            pending[id] += 1;
            parents[c.0].push(id);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = pending
        .iter()
        .enumerate()
        .filter(|(_, p)| **p == 0)
        .map(|(id, _)| Reverse(id))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(id)) = ready.pop() {
        order.push(UnitId(id));
        for &p in &parents[id] {
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(Reverse(p));
            }
        }
    }
    if order.len() < n {
        let stuck = pending.iter().position(|p| *p > 0).unwrap_or(0);
        return Err(CircuitError::Cycle(stuck));
    }
    Ok(order)
}

/// Incremental construction; ids are handed out in insertion order so the
/// root is usually the last unit added.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    variables: Vec<Variable>,
    units: Vec<Unit>,
}

impl CircuitBuilder {
    pub fn new(cardinalities: &[usize]) -> Self {
        CircuitBuilder {
            variables: cardinalities
                .iter()
                .enumerate()
                .map(|(id, &cardinality)| Variable { id, cardinality })
                .collect(),
            units: Vec::new(),
        }
    }

    pub fn binary(n_vars: usize) -> Self {
        Self::new(&vec![2; n_vars])
    }

    pub fn indicator(&mut self, var: usize, value: usize) -> UnitId {
        self.push(Unit::Indicator { var, value })
    }

    pub fn product(&mut self, children: Vec<UnitId>) -> UnitId {
        self.push(Unit::Product { children })
    }

    pub fn sum(&mut self, children: Vec<UnitId>, weights: Vec<f64>) -> UnitId {
        self.push(Unit::Sum { children, weights })
    }

    fn push(&mut self, unit: Unit) -> UnitId {
        self.units.push(unit);
        UnitId(self.units.len() - 1)
    }

    pub fn build(self, root: UnitId) -> Result<Circuit, CircuitError> {
        Circuit::new(self.variables, self.units, root)
    }
}
