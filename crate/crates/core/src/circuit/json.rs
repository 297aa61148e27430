// SPDX-License-Identifier: Apache-2.0

//! JSON circuit documents.
//!
//! ```json
//! {
//!   "variables": [{"id": 0, "cardinality": 2}],
//!   "units": [
//!     {"id": 0, "type": "indicator", "var": 0, "value": 0},
//!     {"id": 1, "type": "indicator", "var": 0, "value": 1},
//!     {"id": 2, "type": "sum", "children": [0, 1], "weights": ["0.3", "0.7"]}
//!   ],
//!   "root": 2
//! }
//! ```
//!
//! Weights are decimal strings; bare JSON numbers are accepted too.

use super::{Circuit, CircuitError, Unit, UnitId, Variable};
use serde::{Deserialize, Serialize};

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Document {
    variables: Vec<Variable>,
    units: Vec<UnitDoc>,
    root: usize,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct UnitDoc {
    id: usize,
    #[serde(rename = "type")]
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<WeightDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    var: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<usize>,
}

#[derive(Deserialize, Serialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Sum,
    Product,
    Indicator,
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum WeightDoc {
    Text(String),
    Number(f64),
}

pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let doc: Document =
        serde_json::from_str(text).map_err(|e| CircuitError::Malformed(e.to_string()))?;
    let mut units = Vec::with_capacity(doc.units.len());
    for (pos, u) in doc.units.iter().enumerate() {
        if u.id != pos {
            return Err(CircuitError::UnitIds(u.id, pos));
        }
        let missing =
            |field: &str| CircuitError::Malformed(format!("unit {}: missing `{field}`", u.id));
        let unit = match u.kind {
            Kind::Sum => {
                let children = u.children.as_ref().ok_or_else(|| missing("children"))?;
                let weights = u.weights.as_ref().ok_or_else(|| missing("weights"))?;
                let weights = weights
                    .iter()
                    .map(|w| parse_weight(u.id, w))
                    .collect::<Result<Vec<_>, _>>()?;
                Unit::Sum {
                    children: children.iter().map(|&c| UnitId(c)).collect(),
                    weights,
                }
            }
            Kind::Product => {
                let children = u.children.as_ref().ok_or_else(|| missing("children"))?;
                Unit::Product {
                    children: children.iter().map(|&c| UnitId(c)).collect(),
                }
            }
            Kind::Indicator => Unit::Indicator {
                var: u.var.ok_or_else(|| missing("var"))?,
                value: u.value.ok_or_else(|| missing("value"))?,
            },
        };
        units.push(unit);
    }
    Circuit::new(doc.variables, units, UnitId(doc.root))
}

fn parse_weight(unit: usize, w: &WeightDoc) -> Result<f64, CircuitError> {
    let bad = |s: String| CircuitError::BadWeight { unit, weight: s };
    let value = match w {
        WeightDoc::Number(x) => *x,
        WeightDoc::Text(s) => s.trim().parse::<f64>().map_err(|_| bad(s.clone()))?,
    };
    if !value.is_finite() || value < 0.0 {
        return Err(bad(value.to_string()));
    }
    Ok(value)
}

/// Serializes a circuit; weights are written as shortest round-trip decimal
/// strings, so `parse_circuit(to_json(c))` reproduces `c` exactly.
pub fn to_json(c: &Circuit) -> String {
    let units = c
        .units()
        .iter()
        .enumerate()
        .map(|(id, unit)| match unit {
            Unit::Sum { children, weights } => UnitDoc {
                id,
                kind: Kind::Sum,
                children: Some(children.iter().map(|c| c.0).collect()),
                weights: Some(
                    weights
                        .iter()
                        .map(|w| WeightDoc::Text(w.to_string()))
                        .collect(),
                ),
                var: None,
                value: None,
            },
            Unit::Product { children } => UnitDoc {
                id,
                kind: Kind::Product,
                children: Some(children.iter().map(|c| c.0).collect()),
                weights: None,
                var: None,
                value: None,
            },
            Unit::Indicator { var, value } => UnitDoc {
                id,
                kind: Kind::Indicator,
                children: None,
                weights: None,
                var: Some(*var),
                value: Some(*value),
            },
        })
        .collect();
    let doc = Document {
        variables: c.variables().to_vec(),
        units,
        root: c.root().0,
    };
    serde_json::to_string_pretty(&doc).expect("circuit documents always serialize")
}
