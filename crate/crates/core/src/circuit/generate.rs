// SPDX-License-Identifier: Apache-2.0

//! Seeded random circuit generators over binary variables.

use super::{Circuit, CircuitBuilder, CircuitError, UnitId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

/// Symmetric Dirichlet(1) draw, renormalized so the entries sum to one.
fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k)
        .map(|_| rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = draws.iter().sum();
    let mut w: Vec<f64> = draws.iter().map(|d| d / total).collect();
    // Push the rounding residue into the largest entry.
    let residue = 1.0 - w.iter().sum::<f64>();
    let imax = (0..k).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
    w[imax] += residue;
    w
}

fn univariate(b: &mut CircuitBuilder, rng: &mut ChaCha8Rng, var: usize) -> UnitId {
    let l0 = b.indicator(var, 0);
    let l1 = b.indicator(var, 1);
    let w = dirichlet(rng, 2);
    b.sum(vec![l0, l1], w)
}

/// Tree-shaped smooth and decomposable circuit with alternating sum and
/// product layers.
///
/// Each sum has `sum_fanout` product children; each product splits its scope
/// into two balanced random halves. After `depth` split layers the remaining
/// scopes become mixtures of fully factorized products. Requires
/// `n_vars >= 2^depth` so that every split layer has two non-empty halves.
pub fn generate_random_tree_pc(
    seed: u64,
    n_vars: usize,
    depth: usize,
    sum_fanout: usize,
) -> Result<Circuit, CircuitError> {
    if n_vars < 2 {
        return Err(CircuitError::Infeasible(format!(
            "need at least 2 variables, got {n_vars}"
        )));
    }
    if depth < 1 {
        return Err(CircuitError::Infeasible("depth must be at least 1".into()));
    }
    if sum_fanout < 1 {
        return Err(CircuitError::Infeasible(
            "sum fanout must be at least 1".into(),
        ));
    }
    if depth >= usize::BITS as usize || n_vars < (1usize << depth) {
        return Err(CircuitError::Infeasible(format!(
            "depth {depth} needs at least {} variables, got {n_vars}",
            1u128 << depth.min(127)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::binary(n_vars);
    let scope: Vec<usize> = (0..n_vars).collect();
    let root = tree_sum(&mut b, &mut rng, &scope, depth, sum_fanout);
    b.build(root)
}

fn tree_sum(
    b: &mut CircuitBuilder,
    rng: &mut ChaCha8Rng,
    scope: &[usize],
    depth: usize,
    fanout: usize,
) -> UnitId {
    if scope.len() == 1 {
        return univariate(b, rng, scope[0]);
    }
    let mut children = Vec::with_capacity(fanout);
    for _ in 0..fanout {
        let product = if depth == 0 {
            let factors = scope.iter().map(|&v| univariate(b, rng, v)).collect();
            b.product(factors)
        } else {
            let mut shuffled = scope.to_vec();
            shuffled.shuffle(rng);
            let (left, right) = shuffled.split_at(shuffled.len() / 2);
            let mut left = left.to_vec();
            let mut right = right.to_vec();
            left.sort_unstable();
            right.sort_unstable();
            let l = tree_sum(b, rng, &left, depth - 1, fanout);
            let r = tree_sum(b, rng, &right, depth - 1, fanout);
            b.product(vec![l, r])
        };
        children.push(product);
    }
    let w = dirichlet(rng, fanout);
    b.sum(children, w)
}

/// Deterministic, smooth and decomposable circuit shaped like a decision
/// tree with occasional independent splits.
///
/// Each sum branches on one variable `v`: child `k` is
/// `[v = k] x sub_k(rest)`, so siblings have disjoint supports. With
/// probability `split_prob` the remaining scope is split into two independent
/// halves below the indicator.
pub fn generate_random_deterministic_pc(
    seed: u64,
    n_vars: usize,
    split_prob: f64,
) -> Result<Circuit, CircuitError> {
    if n_vars < 1 {
        return Err(CircuitError::Infeasible("need at least 1 variable".into()));
    }
    if !(0.0..=1.0).contains(&split_prob) {
        return Err(CircuitError::Infeasible(format!(
            "split probability {split_prob} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::binary(n_vars);
    let scope: Vec<usize> = (0..n_vars).collect();
    let root = det_sum(&mut b, &mut rng, &scope, split_prob);
    b.build(root)
}

fn det_sum(b: &mut CircuitBuilder, rng: &mut ChaCha8Rng, scope: &[usize], split: f64) -> UnitId {
    if scope.len() == 1 {
        return univariate(b, rng, scope[0]);
    }
    let pick = rng.random_range(0..scope.len());
    let var = scope[pick];
    let rest: Vec<usize> = scope.iter().copied().filter(|&v| v != var).collect();
    let mut children = Vec::with_capacity(2);
    for value in 0..2 {
        let leaf = b.indicator(var, value);
        let sub = det_sub(b, rng, &rest, split);
        let mut factors = vec![leaf];
        factors.extend(sub);
        children.push(b.product(factors));
    }
    let w = dirichlet(rng, 2);
    b.sum(children, w)
}

fn det_sub(
    b: &mut CircuitBuilder,
    rng: &mut ChaCha8Rng,
    scope: &[usize],
    split: f64,
) -> Vec<UnitId> {
    if scope.len() >= 2 && rng.random::<f64>() < split {
        let mut shuffled = scope.to_vec();
        shuffled.shuffle(rng);
        let (l, r) = shuffled.split_at(shuffled.len() / 2);
        let (mut l, mut r) = (l.to_vec(), r.to_vec());
        l.sort_unstable();
        r.sort_unstable();
        vec![det_sum(b, rng, &l, split), det_sum(b, rng, &r, split)]
    } else {
        vec![det_sum(b, rng, scope, split)]
    }
}
