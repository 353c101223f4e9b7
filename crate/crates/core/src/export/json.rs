use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ingest::expr::{parse_expression, Comparator};
use crate::model::{ActionSet, DecisionTree, Node, VariableMeta};
use crate::predicates::Predicate;

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PredDoc {
    Axis {
        var: usize,
        threshold: f64,
        #[serde(default)]
        display: Option<String>,
    },
    Linear {
        coefficients: Vec<f64>,
        threshold: f64,
        #[serde(default)]
        display: Option<String>,
    },
    Categorical {
        var: usize,
        groups: Vec<Vec<String>>,
        #[serde(default)]
        display: Option<String>,
    },
    Algebraic {
        lhs: String,
        comparator: Comparator,
        rhs: String,
        #[serde(default)]
        provenance: String,
        #[serde(default)]
        display: Option<String>,
    },
}

/// Structured JSON form of a predicate, with a `display` string.
pub fn predicate_to_json(pred: &Predicate, variables: &[VariableMeta]) -> Value {
    let display = Some(pred.display(variables));
    let doc = match pred {
        Predicate::AxisAligned { var, threshold } => PredDoc::Axis {
            var: *var,
            threshold: *threshold,
            display,
        },
        Predicate::Linear {
            coefficients,
            threshold,
        } => PredDoc::Linear {
            coefficients: coefficients.clone(),
            threshold: *threshold,
            display,
        },
        Predicate::Categorical { var, groups } => PredDoc::Categorical {
            var: *var,
            groups: groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|code| variables[*var].render(*code as f64))
                        .collect()
                })
                .collect(),
            display,
        },
        Predicate::Algebraic {
            lhs,
            comparator,
            rhs,
            provenance,
        } => PredDoc::Algebraic {
            lhs: lhs.to_string(),
            comparator: *comparator,
            rhs: rhs.to_string(),
            provenance: provenance.clone(),
            display,
        },
    };
    serde_json::to_value(doc).expect("predicate serializes")
}

/// Inverse of [`predicate_to_json`]; the `display` field is ignored.
pub fn predicate_from_json(value: &Value, variables: &[VariableMeta]) -> Result<Predicate> {
    let doc: PredDoc = serde_json::from_value(value.clone())?;
    let check_var = |var: usize| {
        if var < variables.len() {
            Ok(())
        } else {
            Err(Error::MalformedJson(format!(
                "variable index {var} out of range"
            )))
        }
    };
    Ok(match doc {
        PredDoc::Axis { var, threshold, .. } => {
            check_var(var)?;
            Predicate::AxisAligned { var, threshold }
        }
        PredDoc::Linear {
            coefficients,
            threshold,
            ..
        } => {
            if coefficients.len() != variables.len() || coefficients.iter().all(|c| *c == 0.0) {
                return Err(Error::MalformedJson("bad linear coefficients".into()));
            }
            Predicate::Linear {
                coefficients,
                threshold,
            }
        }
        PredDoc::Categorical { var, groups, .. } => {
            check_var(var)?;
            let meta = &variables[var];
            let groups = groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|token| {
                            meta.code_of(token)
                                .ok_or_else(|| Error::UnknownCategoricalValue {
                                    variable: meta.name.clone(),
                                    value: token.clone(),
                                })
                        })
                        .collect::<Result<Vec<usize>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            if groups.len() < 2 || groups.iter().any(Vec::is_empty) {
                return Err(Error::MalformedJson(
                    "a grouping needs two nonempty groups".into(),
                ));
            }
            Predicate::Categorical { var, groups }
        }
        PredDoc::Algebraic {
            lhs,
            comparator,
            rhs,
            provenance,
            ..
        } => Predicate::Algebraic {
            lhs: parse_expression(&lhs)?.bind(variables, &|_| None)?,
            comparator,
            rhs: parse_expression(&rhs)?.bind(variables, &|_| None)?,
            provenance,
        },
    })
}

fn node_to_json(tree: &DecisionTree, id: usize) -> Value {
    match &tree.nodes()[id] {
        Node::Inner {
            predicate,
            children,
        } => json!({
            "pred": predicate_to_json(predicate, tree.variables()),
            "children": children.iter().map(|c| node_to_json(tree, *c)).collect::<Vec<_>>(),
        }),
        Node::Leaf { actions, inexact } => {
            let mut leaf = json!({ "actions": actions.ids() });
            if *inexact {
                leaf["inexact"] = Value::Bool(true);
            }
            leaf
        }
    }
}

/// `{"version":1,"variables":[...],"actions":[...],"root":{...}}`. Inner
/// nodes carry `pred` and `children`; leaves carry action indices.
pub fn export_json(tree: &DecisionTree) -> String {
    let doc = json!({
        "version": SCHEMA_VERSION,
        "variables": tree.variables(),
        "actions": tree.labels(),
        "root": node_to_json(tree, tree.root()),
    });
    serde_json::to_string_pretty(&doc).expect("tree serializes")
}

fn node_from_json(
    value: &Value,
    variables: &[VariableMeta],
    nodes: &mut Vec<Node>,
) -> Result<usize> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedJson("node must be an object".into()))?;
    let id = nodes.len();
    if let Some(pred) = obj.get("pred") {
        let predicate = predicate_from_json(pred, variables)?;
        let children = obj
            .get("children")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::MalformedJson("inner node without children".into()))?;
        if children.len() != predicate.arity() {
            return Err(Error::MalformedJson(format!(
                "{} children for a predicate of arity {}",
                children.len(),
                predicate.arity()
            )));
        }
        nodes.push(Node::leaf(ActionSet::singleton(0)));
        let ids = children
            .iter()
            .map(|c| node_from_json(c, variables, nodes))
            .collect::<Result<Vec<_>>>()?;
        nodes[id] = Node::Inner {
            predicate,
            children: ids,
        };
    } else {
        let ids: Vec<u32> =
            serde_json::from_value(obj.get("actions").cloned().ok_or_else(|| {
                Error::MalformedJson("node has neither pred nor actions".into())
            })?)?;
        let actions = ActionSet::new(ids)
            .ok_or_else(|| Error::MalformedJson("leaf has no actions".into()))?;
        let inexact = obj.get("inexact").and_then(Value::as_bool).unwrap_or(false);
        nodes.push(Node::Leaf { actions, inexact });
    }
    Ok(id)
}

pub fn import_json(text: &str) -> Result<DecisionTree> {
    let doc: Value = serde_json::from_str(text)?;
    match doc.get("version").and_then(Value::as_i64) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::SchemaVersionMismatch(v)),
        None => return Err(Error::MalformedJson("missing schema version".into())),
    }
    let variables: Vec<VariableMeta> = serde_json::from_value(
        doc.get("variables")
            .cloned()
            .ok_or_else(|| Error::MalformedJson("missing variables".into()))?,
    )?;
    let labels: Vec<String> = serde_json::from_value(
        doc.get("actions")
            .cloned()
            .ok_or_else(|| Error::MalformedJson("missing actions".into()))?,
    )?;
    let root = doc
        .get("root")
        .ok_or_else(|| Error::MalformedJson("missing root".into()))?;
    let mut nodes = Vec::new();
    node_from_json(root, &variables, &mut nodes)?;
    DecisionTree::new(variables, labels, nodes, 0)
}
