// SPDX-License-Identifier: Apache-2.0

//! Ancestral sampling.

use super::{Assignment, Circuit, CircuitError, Unit, UnitId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Draws `n` complete assignments from the circuit with its `f64` weights.
///
/// Sample `i` uses its own ChaCha stream `i` under `seed`, so results do not
/// depend on thread scheduling.
pub fn sample(c: &Circuit, seed: u64, n: usize) -> Result<Vec<Assignment>, CircuitError> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_one(c, &mut rng)
        })
        .collect()
}

pub(crate) fn sample_one(c: &Circuit, rng: &mut ChaCha8Rng) -> Result<Assignment, CircuitError> {
    let mut x: Vec<Option<usize>> = vec![None; c.n_vars()];
    let mut stack: Vec<UnitId> = vec![c.root()];
    while let Some(u) = stack.pop() {
        match c.unit(u) {
            Unit::Indicator { var, value } => {
                if x[*var].is_some() {
                    return Err(CircuitError::Conflict { var: *var });
                }
                x[*var] = Some(*value);
            }
            Unit::Product { children } => stack.extend(children.iter().rev()),
            Unit::Sum { children, weights } => {
                let r: f64 = rng.random();
                let mut acc = 0.0;
                // Fall back to the last positive weight if rounding leaves `r`
                // above the running total.
                let mut pick = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
                for (slot, w) in weights.iter().enumerate() {
                    acc += w;
                    if r < acc && *w > 0.0 {
                        pick = slot;
                        break;
                    }
                }
                stack.push(children[pick]);
            }
        }
    }
    x.iter()
        .enumerate()
        .map(|(var, v)| v.ok_or(CircuitError::Unassigned(var)))
        .collect()
}
