// SPDX-License-Identifier: Apache-2.0

//! Tree masses and the minimum positive value.

use super::{Circuit, CircuitError, EdgeId, Unit};

/// Root value of every unit with all indicators set to one.
fn unit_totals(c: &Circuit) -> Vec<f64> {
    let mut vals = vec![0.0; c.units().len()];
    for u in c.topological_order() {
        vals[u.0] = match c.unit(*u) {
            Unit::Indicator { .. } => 1.0,
            Unit::Product { children } => children.iter().map(|ch| vals[ch.0]).product(),
            Unit::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(ch, w)| w * vals[ch.0])
                .sum(),
        };
    }
    vals
}

/// Tree mass of every edge: the summed weight of all induced trees that use
/// the edge, computed by one bottom-up and one top-down pass.
///
/// The top-down flow of a unit is the summed weight of the partial trees
/// reaching it from the root; an edge's mass is the flow of its sum times its
/// weight times the total weight of the sub-trees below its child.
pub fn edge_masses(c: &Circuit) -> Vec<f64> {
    let totals = unit_totals(c);
    let mut flow = vec![0.0; c.units().len()];
    flow[c.root().0] = 1.0;
    let mut masses = vec![0.0; c.n_weight_sites()];
    for u in c.topological_order().iter().rev() {
        let f = flow[u.0];
        match c.unit(*u) {
            Unit::Sum { children, weights } => {
                for (slot, (ch, w)) in children.iter().zip(weights).enumerate() {
                    flow[ch.0] += f * w;
                    masses[c.edge_id(*u, slot).0] = f * w * totals[ch.0];
                }
            }
            Unit::Product { children } => {
                for (i, ch) in children.iter().enumerate() {
                    let others: f64 = children
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, o)| totals[o.0])
                        .product();
                    flow[ch.0] += f * others;
                }
            }
            Unit::Indicator { .. } => {}
        }
    }
    masses
}

/// Summed probability of the induced trees containing `edge`.
pub fn weight_tree_mass(c: &Circuit, edge: EdgeId) -> Result<f64, CircuitError> {
    c.edge(edge)?;
    Ok(edge_masses(c)[edge.0])
}

/// Smallest positive root value: indicators at one, sums replaced by the
/// minimum over their positive weighted children.
pub fn min_positive_value(c: &Circuit) -> Result<f64, CircuitError> {
    let mut vals = vec![0.0; c.units().len()];
    for u in c.topological_order() {
        vals[u.0] = match c.unit(*u) {
            Unit::Indicator { .. } => 1.0,
            Unit::Product { children } => children.iter().map(|ch| vals[ch.0]).product(),
            Unit::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(ch, w)| w * vals[ch.0])
                .filter(|t| *t > 0.0)
                .fold(f64::INFINITY, f64::min),
        };
        if vals[u.0] == f64::INFINITY {
            vals[u.0] = 0.0;
        }
    }
    let mv = vals[c.root().0];
    if mv > 0.0 {
        Ok(mv)
    } else {
        Err(CircuitError::AllZero)
    }
}
