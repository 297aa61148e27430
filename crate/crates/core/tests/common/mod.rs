// SPDX-License-Identifier: Apache-2.0

//! Independent oracles shared by the integration tests. Nothing here calls
//! into the evaluation or float code it is used to check.

#![allow(dead_code)]

use aaipc::circuit::{parse_circuit, Circuit, EdgeId, Unit, UnitId};
use aaipc::{MulMode, MultiplierPlan, Rounding};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Three binary variables, three sums, seven products, nine indicators.
/// Unit 0..8 are indicators, 9..15 products (p1..p7), 16..18 sums (s2, s3,
/// s1). Variables: X1 = 0, X2 = 1, X3 = 2.
pub const THREE_VAR_PC: &str = r#"{
  "variables": [
    {"id": 0, "cardinality": 2},
    {"id": 1, "cardinality": 2},
    {"id": 2, "cardinality": 2}
  ],
  "units": [
    {"id": 0, "type": "indicator", "var": 0, "value": 0},
    {"id": 1, "type": "indicator", "var": 0, "value": 1},
    {"id": 2, "type": "indicator", "var": 2, "value": 0},
    {"id": 3, "type": "indicator", "var": 1, "value": 0},
    {"id": 4, "type": "indicator", "var": 2, "value": 1},
    {"id": 5, "type": "indicator", "var": 1, "value": 1},
    {"id": 6, "type": "indicator", "var": 2, "value": 0},
    {"id": 7, "type": "indicator", "var": 2, "value": 1},
    {"id": 8, "type": "indicator", "var": 1, "value": 0},
    {"id": 9, "type": "product", "children": [0, 16]},
    {"id": 10, "type": "product", "children": [1, 16]},
    {"id": 11, "type": "product", "children": [1, 17]},
    {"id": 12, "type": "product", "children": [2, 3]},
    {"id": 13, "type": "product", "children": [4, 5]},
    {"id": 14, "type": "product", "children": [5, 6]},
    {"id": 15, "type": "product", "children": [7, 8]},
    {"id": 16, "type": "sum", "children": [12, 13], "weights": ["0.5", "0.5"]},
    {"id": 17, "type": "sum", "children": [14, 15], "weights": ["0.5", "0.5"]},
    {"id": 18, "type": "sum", "children": [9, 10, 11],
     "weights": ["0.3333333333333333", "0.3333333333333333", "0.3333333333333333"]}
  ],
  "root": 18
}"#;

pub fn three_var_pc() -> Circuit {
    parse_circuit(THREE_VAR_PC).expect("fixture parses")
}

/// Hand computation of the fixture with weights exactly 1/3 and 1/2.
pub fn three_var_rational(x: &[usize]) -> BigRational {
    let third = BigRational::new(1.into(), 3.into());
    let half = BigRational::new(1.into(), 2.into());
    let ind = |b: bool| {
        if b {
            BigRational::one()
        } else {
            BigRational::zero()
        }
    };
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    let s2 = &half * ind(x3 == 0 && x2 == 0) + &half * ind(x3 == 1 && x2 == 1);
    let s3 = &half * ind(x2 == 1 && x3 == 0) + &half * ind(x3 == 1 && x2 == 0);
    &third * ind(x1 == 0) * &s2 + &third * ind(x1 == 1) * &s2 + &third * ind(x1 == 1) * s3
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// One induced tree: the edges it keeps and the product of their weights.
#[derive(Clone, Debug)]
pub struct InducedTree {
    pub edges: Vec<EdgeId>,
    pub weight: f64,
    /// `(var, value)` of every indicator leaf.
    pub leaves: Vec<(usize, usize)>,
}

/// Every induced tree below `u` by explicit recursion.
pub fn induced_trees(c: &Circuit) -> Vec<InducedTree> {
    trees_below(c, c.root())
}

fn trees_below(c: &Circuit, u: UnitId) -> Vec<InducedTree> {
    match c.unit(u) {
        Unit::Indicator { var, value } => vec![InducedTree {
            edges: vec![],
            weight: 1.0,
            leaves: vec![(*var, *value)],
        }],
        Unit::Sum { children, weights } => {
            let mut out = Vec::new();
            for (slot, (ch, w)) in children.iter().zip(weights).enumerate() {
                let e = c.edge_id(u, slot);
                for mut t in trees_below(c, *ch) {
                    t.edges.push(e);
                    t.weight *= w;
                    out.push(t);
                }
            }
            out
        }
        Unit::Product { children } => {
            let mut acc = vec![InducedTree {
                edges: vec![],
                weight: 1.0,
                leaves: vec![],
            }];
            for ch in children {
                let sub = trees_below(c, *ch);
                let mut next = Vec::with_capacity(acc.len() * sub.len());
                for a in &acc {
                    for s in &sub {
                        let mut t = a.clone();
                        t.edges.extend(&s.edges);
                        t.weight *= s.weight;
                        t.leaves.extend(&s.leaves);
                        next.push(t);
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

impl InducedTree {
    pub fn consistent(&self, x: &[usize]) -> bool {
        self.leaves.iter().all(|(v, k)| x[*v] == *k)
    }
}

/// Reference emulation of the reduced-precision format on top of `f64`.
/// Valid for `M <= 24`, where every product of two significands and every
/// sum that matters is exact in `f64`.
#[derive(Clone, Copy, Debug)]
pub struct RefFormat {
    pub exp_bits: u32,
    pub man_bits: u32,
    pub bias: i32,
    pub rounding: Rounding,
}

impl RefFormat {
    pub fn new(exp_bits: u32, man_bits: u32, rounding: Rounding) -> Self {
        assert!(man_bits <= 24);
        RefFormat {
            exp_bits,
            man_bits,
            bias: (1 << (exp_bits - 1)) - 1,
            rounding,
        }
    }

    fn min_exp(&self) -> i32 {
        1 - self.bias
    }

    fn max_exp(&self) -> i32 {
        (1 << self.exp_bits) - 1 - self.bias
    }

    pub fn max_value(&self) -> f64 {
        let m = self.man_bits as i32;
        (2.0 - 2f64.powi(-m)) * 2f64.powi(self.max_exp())
    }

    /// Exponent and fraction of a positive value: `x = 2^e (1 + f)`.
    pub fn split(x: f64) -> (i32, f64) {
        let mut e = x.log2().floor() as i32;
        // log2 can be off by one ulp near powers of two.
        while 2f64.powi(e) > x {
            e -= 1;
        }
        while 2f64.powi(e + 1) <= x {
            e += 1;
        }
        (e, x / 2f64.powi(e) - 1.0)
    }

    /// Rounds a non-negative value into the format: `(value, underflow,
    /// overflow)`.
    pub fn quantize(&self, x: f64) -> (f64, bool, bool) {
        if x == 0.0 {
            return (0.0, false, false);
        }
        let (mut e, f) = Self::split(x);
        let scale = 2f64.powi(self.man_bits as i32);
        let scaled = (1.0 + f) * scale;
        let mut r = match self.rounding {
            Rounding::NearestEven => scaled.round_ties_even(),
            Rounding::TowardZero => scaled.trunc(),
        };
        if r >= 2.0 * scale {
            r /= 2.0;
            e += 1;
        }
        if e < self.min_exp() {
            (0.0, true, false)
        } else if e > self.max_exp() {
            (self.max_value(), false, true)
        } else {
            (r / scale * 2f64.powi(e), false, false)
        }
    }

    pub fn mul(&self, mode: MulMode, a: f64, b: f64) -> (f64, bool, bool) {
        if a == 0.0 || b == 0.0 {
            return (0.0, false, false);
        }
        match mode {
            MulMode::Exact => self.quantize(a * b),
            MulMode::Aai => {
                let (ea, fa) = Self::split(a);
                let (eb, fb) = Self::split(b);
                let (e, f) = if fa + fb >= 1.0 {
                    (ea + eb + 1, fa + fb - 1.0)
                } else {
                    (ea + eb, fa + fb)
                };
                if e < self.min_exp() {
                    (0.0, true, false)
                } else if e > self.max_exp() {
                    (self.max_value(), false, true)
                } else {
                    ((1.0 + f) * 2f64.powi(e), false, false)
                }
            }
        }
    }

    pub fn add(&self, a: f64, b: f64) -> (f64, bool, bool) {
        self.quantize(a + b)
    }
}

/// Straightforward recursive evaluation of a circuit in the reference
/// format. Returns the root value and the number of saturation events.
pub fn reference_eval(
    c: &Circuit,
    x: &[usize],
    fmt: &RefFormat,
    plan: &MultiplierPlan,
) -> (f64, u32) {
    let mut memo: Vec<Option<f64>> = vec![None; c.units().len()];
    let mut events = 0;
    let mut weights = Vec::new();
    for e in c.edges() {
        let (w, u, o) = fmt.quantize(e.weight);
        events += u as u32 + o as u32;
        weights.push(w);
    }
    let v = eval_rec(c, c.root(), x, fmt, plan, &weights, &mut memo, &mut events);
    (v, events)
}

#[allow(clippy::too_many_arguments)]
fn eval_rec(
    c: &Circuit,
    u: UnitId,
    x: &[usize],
    fmt: &RefFormat,
    plan: &MultiplierPlan,
    weights: &[f64],
    memo: &mut Vec<Option<f64>>,
    events: &mut u32,
) -> f64 {
    if let Some(v) = memo[u.0] {
        return v;
    }
    let v = match c.unit(u) {
        Unit::Indicator { var, value } => {
            if x[*var] == *value {
                1.0
            } else {
                0.0
            }
        }
        Unit::Product { children } => {
            let vals: Vec<f64> = children
                .iter()
                .map(|ch| eval_rec(c, *ch, x, fmt, plan, weights, memo, events))
                .collect();
            let mut acc = vals[0];
            for (k, v) in vals[1..].iter().enumerate() {
                let mode = plan.mode(c.product_site(u, k));
                acc = note(events, fmt.mul(mode, acc, *v));
            }
            acc
        }
        Unit::Sum { children, .. } => {
            let vals: Vec<f64> = children
                .iter()
                .map(|ch| eval_rec(c, *ch, x, fmt, plan, weights, memo, events))
                .collect();
            let mut acc = 0.0;
            for (slot, v) in vals.iter().enumerate() {
                let e = c.edge_id(u, slot);
                let t = note(events, fmt.mul(plan.mode(e.0), weights[e.0], *v));
                acc = note(events, fmt.add(acc, t));
            }
            acc
        }
    };
    memo[u.0] = Some(v);
    v
}

fn note(events: &mut u32, (v, un, ov): (f64, bool, bool)) -> f64 {
    *events += un as u32 + ov as u32;
    v
}

/// Rounds a positive rational to `M` fraction bits; returns `(e, mantissa
/// numerator)` with unbounded exponent.
pub fn round_rational(q: &BigRational, man_bits: u32, rounding: Rounding) -> (i64, u64) {
    assert!(q.is_positive());
    let two = BigRational::from_integer(2.into());
    let mut e: i64 = 0;
    let mut norm = q.clone();
    while norm >= two {
        norm /= &two;
        e += 1;
    }
    while norm < BigRational::one() {
        norm *= &two;
        e -= 1;
    }
    let scaled = norm * BigRational::from_integer((1u64 << man_bits).into());
    let floor = scaled.floor();
    let rem = &scaled - &floor;
    let mut n = floor.to_integer().to_u64().unwrap();
    if rounding == Rounding::NearestEven {
        let half = BigRational::new(1.into(), 2.into());
        if rem > half || (rem == half && n % 2 == 1) {
            n += 1;
        }
    }
    if n == 1u64 << (man_bits + 1) {
        n >>= 1;
        e += 1;
    }
    (e, n - (1u64 << man_bits))
}

/// Exhaustive max-product score of `x`: the best induced tree consistent
/// with it.
pub fn max_product_score(trees: &[InducedTree], x: &[usize]) -> f64 {
    trees
        .iter()
        .filter(|t| t.consistent(x))
        .map(|t| t.weight)
        .fold(0.0, f64::max)
}

/// `f64` value of every unit at a complete state, by memoized recursion.
pub fn unit_values(c: &Circuit, x: &[usize]) -> Vec<f64> {
    fn go(c: &Circuit, u: UnitId, x: &[usize], memo: &mut Vec<Option<f64>>) -> f64 {
        if let Some(v) = memo[u.0] {
            return v;
        }
        let v = match c.unit(u) {
            Unit::Indicator { var, value } => (x[*var] == *value) as u8 as f64,
            Unit::Product { children } => children.iter().map(|ch| go(c, *ch, x, memo)).product(),
            Unit::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(ch, w)| w * go(c, *ch, x, memo))
                .sum(),
        };
        memo[u.0] = Some(v);
        v
    }
    let mut memo = vec![None; c.units().len()];
    for i in 0..c.units().len() {
        go(c, UnitId(i), x, &mut memo);
    }
    memo.into_iter().map(|v| v.unwrap()).collect()
}

/// Every complete state of `n` binary variables.
pub fn binary_states(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << n)
        .map(|k| (0..n).map(|i| (k >> (n - 1 - i)) & 1).collect())
        .collect()
}
