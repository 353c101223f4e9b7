//! Canonical controller CSV.
//!
//! ```text
//! #PERMISSIVE            (or #NON-PERMISSIVE; must come first)
//! #VARS 3                (optional)
//! 0,0,5,neu
//! 2,6,10,dec
//! 2,6,10,neu
//! ```
//!
//! One data line per (state, action) pair; lines of the same state merge.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ingest::expr::parse_number;
use crate::model::{Controller, ControllerBuilder, StateKey, VarKind, VariableMeta};

struct DataLine<'a> {
    line: usize,
    fields: Vec<(&'a str, usize)>,
    action: &'a str,
}

/// Parses a controller CSV. `meta` fixes variable names and kinds; categorical
/// variables with an empty dictionary have it built from the observed tokens.
/// Without metadata a column is numeric iff every token is a number.
pub fn parse_controller_csv(text: &str, meta: Option<&[VariableMeta]>) -> Result<Controller> {
    let mut permissive = None;
    let mut declared_vars: Option<usize> = None;
    let mut data = Vec::new();

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(directive) = line.trim_start().strip_prefix('#') {
            let directive = directive.trim();
            if permissive.is_none() {
                permissive = Some(match directive {
                    "PERMISSIVE" => true,
                    "NON-PERMISSIVE" => false,
                    _ => {
                        return Err(Error::parse(
                            line_no,
                            1,
                            "first directive must be #PERMISSIVE or #NON-PERMISSIVE",
                        ))
                    }
                });
            } else if let Some(n) = directive.strip_prefix("VARS") {
                let n = n.trim().parse().map_err(|_| {
                    Error::parse(line_no, 7, "#VARS expects a non-negative integer")
                })?;
                declared_vars = Some(n);
            }
            continue;
        }
        if permissive.is_none() {
            return Err(Error::parse(
                line_no,
                1,
                "missing #PERMISSIVE or #NON-PERMISSIVE header",
            ));
        }
        let mut fields = Vec::new();
        let mut column = 1;
        for field in line.split(',') {
            fields.push((field.trim(), column));
            column += field.chars().count() + 1;
        }
        let (action, _) = fields.pop().expect("split yields at least one field");
        if action.is_empty() {
            return Err(Error::parse(line_no, column - 1, "empty action token"));
        }
        data.push(DataLine {
            line: line_no,
            fields,
            action,
        });
    }
    let permissive = permissive
        .ok_or_else(|| Error::parse(1, 1, "missing #PERMISSIVE or #NON-PERMISSIVE header"))?;

    let arity = match (meta, declared_vars) {
        (Some(m), Some(n)) if m.len() != n => {
            return Err(Error::ArityMismatch {
                line: 0,
                expected: m.len(),
                found: n,
            })
        }
        (Some(m), _) => m.len(),
        (None, Some(n)) => n,
        (None, None) => data.first().map_or(0, |d| d.fields.len()),
    };
    for d in &data {
        if d.fields.len() != arity {
            return Err(Error::ArityMismatch {
                line: d.line,
                expected: arity,
                found: d.fields.len(),
            });
        }
    }

    let mut variables: Vec<VariableMeta> = match meta {
        Some(m) => m.to_vec(),
        None => (0..arity)
            .map(|i| {
                let numeric = data.iter().all(|d| parse_number(d.fields[i].0).is_some());
                VariableMeta {
                    name: format!("x_{i}"),
                    kind: if numeric {
                        VarKind::Numeric
                    } else {
                        VarKind::Categorical
                    },
                    dictionary: Vec::new(),
                }
            })
            .collect(),
    };
    for (i, var) in variables.iter_mut().enumerate() {
        if var.is_categorical() && var.dictionary.is_empty() {
            let observed: BTreeSet<&str> = data.iter().map(|d| d.fields[i].0).collect();
            var.dictionary = observed.into_iter().map(str::to_string).collect();
        }
    }

    let mut builder = ControllerBuilder::new(variables.clone());
    let mut seen = HashSet::new();
    for d in &data {
        let mut state = Vec::with_capacity(arity);
        for (var, (token, column)) in variables.iter().zip(&d.fields) {
            let value = match var.kind {
                VarKind::Numeric => parse_number(token).ok_or_else(|| {
                    Error::parse(d.line, *column, format!("`{token}` is not a number"))
                })?,
                VarKind::Categorical => {
                    var.code_of(token)
                        .ok_or_else(|| Error::UnknownCategoricalToken {
                            line: d.line,
                            variable: var.name.clone(),
                            token: token.to_string(),
                        })? as f64
                }
            };
            state.push(value);
        }
        if !permissive && !seen.insert(StateKey::of(&state)) {
            return Err(Error::DuplicateStateInDeterministicFile { line: d.line });
        }
        builder.insert(state, [d.action])?;
    }
    builder.finish(permissive)
}

/// Writes the canonical CSV form; parsing it with the controller's own
/// variables as metadata reproduces the controller.
pub fn write_controller_csv(controller: &Controller) -> String {
    let mut out = String::new();
    out.push_str(if controller.is_permissive() {
        "#PERMISSIVE\n"
    } else {
        "#NON-PERMISSIVE\n"
    });
    let _ = writeln!(out, "#VARS {}", controller.variables().len());
    for (state, set) in controller.rows() {
        let fields: Vec<String> = controller
            .variables()
            .iter()
            .zip(state)
            .map(|(var, v)| var.render(*v))
            .collect();
        let prefix = fields.join(",");
        for label in set.labels(controller.labels()) {
            if prefix.is_empty() {
                let _ = writeln!(out, "{label}");
            } else {
                let _ = writeln!(out, "{prefix},{label}");
            }
        }
    }
    out
}
