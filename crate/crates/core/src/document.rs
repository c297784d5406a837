//! Polytope documents: a line-oriented text format and a JSON equivalent.
//!
//! Text form:
//!
//! ```text
//! # comment
//! name s21
//! dim 2
//! 0 0
//! 9 0
//! 3 2
//! ```
//!
//! JSON form: `{"name": "s21", "dim": 2, "vertices": [[0,0],[9,0],[3,2]]}`.
//! Coordinates may be JSON integers or decimal strings of any length.

use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::polytope::{LatticePolytope, Point};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolytopeDocument {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub name: Option<String>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

impl PolytopeDocument {
    /// Sorted vertices, as emitted in every output document.
    pub fn from_polytope(p: &LatticePolytope, name: Option<String>) -> Self {
        PolytopeDocument {
            dim: p.dim(),
            vertices: p.sorted_vertices(),
            name,
        }
    }

    /// Accepts either form; JSON is recognised by a leading `{`.
    pub fn parse(input: &str) -> Result<Self> {
        if input.trim_start().starts_with('{') {
            Self::parse_json(input)
        } else {
            Self::parse_text(input)
        }
    }

    pub fn parse_text(input: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut name = None;
        let mut vertices = Vec::new();
        for (idx, raw) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let head = fields.next().unwrap_or_default();
            match head {
                "dim" => {
                    if dim.is_some() {
                        return Err(parse_error(line_no, "duplicate `dim` line"));
                    }
                    let value = fields
                        .next()
                        .ok_or_else(|| parse_error(line_no, "`dim` needs a value"))?;
                    let d: usize = value.parse().map_err(|_| {
                        parse_error(line_no, format!("invalid dimension `{value}`"))
                    })?;
                    if d == 0 {
                        return Err(parse_error(line_no, "dimension must be positive"));
                    }
                    if fields.next().is_some() {
                        return Err(parse_error(line_no, "unexpected text after dimension"));
                    }
                    dim = Some(d);
                }
                "name" => {
                    let rest = line["name".len()..].trim();
                    if rest.is_empty() {
                        return Err(parse_error(line_no, "`name` needs a value"));
                    }
                    name = Some(rest.to_string());
                }
                _ => {
                    let Some(d) = dim else {
                        return Err(parse_error(line_no, "vertex before the `dim` line"));
                    };
                    let coords = line
                        .split_whitespace()
                        .enumerate()
                        .map(|(i, tok)| {
                            tok.parse::<BigInt>().map_err(|_| {
                                parse_error(
                                    line_no,
                                    format!("field {}: `{tok}` is not an integer", i + 1),
                                )
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if coords.len() != d {
                        return Err(parse_error(
                            line_no,
                            format!("expected {d} coordinates, found {}", coords.len()),
                        ));
                    }
                    vertices.push(coords);
                }
            }
        }
        let dim =
            dim.ok_or_else(|| parse_error(input.lines().count().max(1), "missing `dim` line"))?;
        if vertices.is_empty() {
            return Err(parse_error(input.lines().count().max(1), "no vertices"));
        }
        Ok(PolytopeDocument {
            dim,
            vertices,
            name,
        })
    }

    pub fn parse_json(input: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(input).map_err(|e| parse_error(e.line(), e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| parse_error(1, "expected a JSON object"))?;
        let dim = obj
            .get("dim")
            .and_then(Value::as_u64)
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_error(1, "field `dim`: expected a positive integer"))?
            as usize;
        let name = match obj.get("name") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(parse_error(1, "field `name`: expected a string")),
        };
        let rows = obj
            .get("vertices")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_error(1, "field `vertices`: expected an array"))?;
        let mut vertices = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let coords = row
                .as_array()
                .ok_or_else(|| parse_error(1, format!("vertices[{i}]: expected an array")))?;
            if coords.len() != dim {
                return Err(parse_error(
                    1,
                    format!(
                        "vertices[{i}]: expected {dim} coordinates, found {}",
                        coords.len()
                    ),
                ));
            }
            let point = coords
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    json_to_bigint(c).ok_or_else(|| {
                        parse_error(1, format!("vertices[{i}][{j}]: not an integer"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            vertices.push(point);
        }
        if vertices.is_empty() {
            return Err(parse_error(1, "no vertices"));
        }
        Ok(PolytopeDocument {
            dim,
            vertices,
            name,
        })
    }

    pub fn to_polytope(&self) -> Result<LatticePolytope> {
        LatticePolytope::new(self.dim, self.vertices.clone())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            out.push_str(&format!("name {name}\n"));
        }
        out.push_str(&format!("dim {}\n", self.dim));
        for v in &self.vertices {
            let fields: Vec<String> = v.iter().map(ToString::to_string).collect();
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut value = json!({
            "dim": self.dim,
            "vertices": self.vertices.iter().map(|v| point_to_json(v)).collect::<Vec<_>>(),
        });
        if let Some(name) = &self.name {
            value["name"] = json!(name);
        }
        value
    }
}

/// JSON number when it fits in 64 bits, decimal string otherwise.
pub fn bigint_to_json(x: &BigInt) -> Value {
    match i64::try_from(x) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

pub fn json_to_bigint(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .or_else(|| n.as_u64().map(BigInt::from)),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

pub fn point_to_json(p: &[BigInt]) -> Value {
    Value::Array(p.iter().map(bigint_to_json).collect())
}
