use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Controller, ControllerBuilder, VarKind, VariableMeta};

#[derive(Debug, Serialize, Deserialize)]
pub struct StrategyRow {
    pub state: Vec<Value>,
    pub actions: Vec<String>,
}

/// Model-checker strategy export: `{"variables": [...], "rows": [{"state": [...], "actions": [...]}]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct StrategyDoc {
    pub variables: Vec<String>,
    pub rows: Vec<StrategyRow>,
}

/// Parses a strategy document. The controller is permissive iff some row
/// allows more than one action. Without metadata, columns holding strings
/// are categorical and their dictionaries are the sorted observed tokens.
pub fn parse_strategy_json(text: &str, meta: Option<&[VariableMeta]>) -> Result<Controller> {
    let doc: StrategyDoc = serde_json::from_str(text)?;
    let n = doc.variables.len();
    for (i, row) in doc.rows.iter().enumerate() {
        if row.state.len() != n {
            return Err(Error::ArityMismatch {
                line: i,
                expected: n,
                found: row.state.len(),
            });
        }
        if row.actions.is_empty() {
            return Err(Error::EmptyActionList(i));
        }
    }
    let mut variables: Vec<VariableMeta> = match meta {
        Some(m) => {
            if m.len() != n {
                return Err(Error::ArityMismatch {
                    line: 0,
                    expected: m.len(),
                    found: n,
                });
            }
            m.iter()
                .zip(&doc.variables)
                .map(|(v, name)| VariableMeta {
                    name: name.clone(),
                    ..v.clone()
                })
                .collect()
        }
        None => (0..n)
            .map(|i| {
                let strings = doc.rows.iter().filter(|r| r.state[i].is_string()).count();
                let kind = if strings == 0 {
                    VarKind::Numeric
                } else if strings == doc.rows.len() {
                    VarKind::Categorical
                } else {
                    return Err(Error::MalformedJson(format!(
                        "column `{}` mixes numbers and strings",
                        doc.variables[i]
                    )));
                };
                Ok(VariableMeta {
                    name: doc.variables[i].clone(),
                    kind,
                    dictionary: Vec::new(),
                })
            })
            .collect::<Result<_>>()?,
    };
    for (i, var) in variables.iter_mut().enumerate() {
        if var.is_categorical() && var.dictionary.is_empty() {
            let observed: BTreeSet<String> =
                doc.rows.iter().map(|r| token_of(&r.state[i])).collect();
            var.dictionary = observed.into_iter().collect();
        }
    }

    let permissive = doc
        .rows
        .iter()
        .any(|r| r.actions.iter().collect::<BTreeSet<_>>().len() > 1);
    let mut builder = ControllerBuilder::new(variables.clone());
    for (i, row) in doc.rows.iter().enumerate() {
        let state = variables
            .iter()
            .zip(&row.state)
            .map(|(var, value)| match var.kind {
                VarKind::Numeric => value.as_f64().ok_or_else(|| {
                    Error::MalformedJson(format!("row {i}: `{}` expects a number", var.name))
                }),
                VarKind::Categorical => {
                    let token = token_of(value);
                    var.code_of(&token).map(|c| c as f64).ok_or_else(|| {
                        Error::UnknownCategoricalToken {
                            line: i,
                            variable: var.name.clone(),
                            token,
                        }
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        builder.insert(state, &row.actions)?;
    }
    // merged duplicate states can create multi-action rows
    let c = builder.finish(true)?;
    if permissive || c.rows().any(|(_, set)| set.len() > 1) {
        Ok(c)
    } else {
        let actions = (0..c.len()).map(|r| c.actions(r).clone()).collect();
        c.with_actions(actions, false)
    }
}

fn token_of(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
