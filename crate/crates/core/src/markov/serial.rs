//! JSON encoding of spaces, distributions and kernels.
//!
//! ```json
//! {"space": ["0", "1"], "weights": {"0": "1/4", "1": "3/4"}}
//! ```
//!
//! Rational weights are `"p/q"` strings, float weights are numbers. A space is
//! a list of outcome labels (an atom whose label is derived from its
//! outcomes), an object `{"label": .., "outcomes": [..]}`, or a list of such
//! factors for a product. The empty list is the unit space.

use std::fmt;

use serde_json::{json, Map, Value};

use super::{Dist, FiniteSpace, Kernel};
use crate::weight::Weight;

/// A decoding failure, located by a JSON path such as `$.prior.weights`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

impl ParseError {
    pub fn new(path: &str, message: impl fmt::Display) -> Self {
        ParseError {
            path: path.to_string(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ParseError {}

pub type ParseResult<T> = std::result::Result<T, ParseError>;

pub fn field<'a>(v: &'a Value, key: &str, path: &str) -> ParseResult<&'a Value> {
    v.get(key)
        .ok_or_else(|| ParseError::new(&format!("{path}.{key}"), "missing field"))
}

fn derived_label(outcomes: &[String]) -> String {
    format!("{{{}}}", outcomes.join(","))
}

pub fn space_to_json(space: &FiniteSpace) -> Value {
    let atom_json = |a: &super::Atom| {
        if a.label() == derived_label(a.outcomes()) {
            json!(a.outcomes())
        } else {
            json!({"label": a.label(), "outcomes": a.outcomes()})
        }
    };
    match space.atoms() {
        [single] => atom_json(single),
        atoms => Value::Array(atoms.iter().map(atom_json).collect()),
    }
}

pub fn space_from_json(v: &Value, path: &str) -> ParseResult<FiniteSpace> {
    let strings = |items: &[Value], p: &str| -> ParseResult<Vec<String>> {
        items
            .iter()
            .enumerate()
            .map(|(i, o)| {
                o.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| ParseError::new(&format!("{p}[{i}]"), "expected a string"))
            })
            .collect()
    };
    match v {
        Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_string) => {
            let outcomes = strings(items, path)?;
            FiniteSpace::new(derived_label(&outcomes), outcomes)
                .map_err(|e| ParseError::new(path, e))
        }
        Value::Array(items) => {
            let mut factors = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                factors.push(space_from_json(item, &format!("{path}[{i}]"))?);
            }
            Ok(FiniteSpace::product(&factors))
        }
        Value::Object(_) => {
            let label = field(v, "label", path)?
                .as_str()
                .ok_or_else(|| ParseError::new(&format!("{path}.label"), "expected a string"))?;
            let outcomes_path = format!("{path}.outcomes");
            let outcomes = field(v, "outcomes", path)?
                .as_array()
                .ok_or_else(|| ParseError::new(&outcomes_path, "expected an array"))?;
            let outcomes = strings(outcomes, &outcomes_path)?;
            FiniteSpace::new(label, outcomes).map_err(|e| ParseError::new(path, e))
        }
        _ => Err(ParseError::new(path, "expected a space (array or object)")),
    }
}

fn weights_to_json<W: Weight>(space: &FiniteSpace, weights: &[W]) -> Value {
    let mut m = Map::new();
    for (i, w) in weights.iter().enumerate() {
        m.insert(space.outcome_label(i), w.to_json());
    }
    Value::Object(m)
}

fn weights_from_json<W: Weight>(space: &FiniteSpace, v: &Value, path: &str) -> ParseResult<Vec<W>> {
    let obj = v
        .as_object()
        .ok_or_else(|| ParseError::new(path, "expected an object of outcome weights"))?;
    let mut weights = vec![W::zero(); space.len()];
    for (label, w) in obj {
        let p = format!("{path}.{label}");
        let i = space.index_of(label).map_err(|e| ParseError::new(&p, e))?;
        weights[i] = W::from_json(w).map_err(|e| ParseError::new(&p, e))?;
    }
    Ok(weights)
}

pub fn dist_to_json<W: Weight>(d: &Dist<W>) -> Value {
    json!({
        "space": space_to_json(d.space()),
        "weights": weights_to_json(d.space(), d.weights()),
    })
}

pub fn dist_from_json<W: Weight>(v: &Value, path: &str) -> ParseResult<Dist<W>> {
    let space = space_from_json(field(v, "space", path)?, &format!("{path}.space"))?;
    let wpath = format!("{path}.weights");
    let weights = weights_from_json(&space, field(v, "weights", path)?, &wpath)?;
    Dist::new(space, weights).map_err(|e| ParseError::new(&wpath, e))
}

pub fn kernel_to_json<W: Weight>(k: &Kernel<W>) -> Value {
    let mut rows = Map::new();
    for x in 0..k.dom().len() {
        let row = match k.row(x) {
            Ok(r) => weights_to_json(k.cod(), r),
            Err(_) => Value::Null,
        };
        rows.insert(k.dom().outcome_label(x), row);
    }
    json!({
        "dom": space_to_json(k.dom()),
        "cod": space_to_json(k.cod()),
        "rows": rows,
    })
}

pub fn kernel_from_json<W: Weight>(v: &Value, path: &str) -> ParseResult<Kernel<W>> {
    let dom = space_from_json(field(v, "dom", path)?, &format!("{path}.dom"))?;
    let cod = space_from_json(field(v, "cod", path)?, &format!("{path}.cod"))?;
    let rpath = format!("{path}.rows");
    let rows_json = field(v, "rows", path)?
        .as_object()
        .ok_or_else(|| ParseError::new(&rpath, "expected an object keyed by domain outcome"))?;
    let mut rows: Vec<Option<Vec<W>>> = vec![None; dom.len()];
    let mut seen = vec![false; dom.len()];
    for (label, row) in rows_json {
        let p = format!("{rpath}.{label}");
        let x = dom.index_of(label).map_err(|e| ParseError::new(&p, e))?;
        seen[x] = true;
        if !row.is_null() {
            rows[x] = Some(weights_from_json(&cod, row, &p)?);
        }
    }
    if let Some(x) = seen.iter().position(|s| !s) {
        return Err(ParseError::new(
            &format!("{rpath}.{}", dom.outcome_label(x)),
            "missing row",
        ));
    }
    Kernel::partial(dom, cod, rows).map_err(|e| ParseError::new(&rpath, e))
}
