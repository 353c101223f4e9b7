//! Decision-path tracing and operator-driven simulation runs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::StateKey;
use crate::model::{format_state, ActionId, DecisionTree, Node, NodeId, VarKind, VariableMeta};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStep {
    pub node: NodeId,
    pub predicate: String,
    pub branch: usize,
    /// Edge label of the branch: `true`/`false` or the categorical group.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionPath {
    pub steps: Vec<PathStep>,
    pub leaf: NodeId,
    pub action_ids: Vec<ActionId>,
    pub actions: Vec<String>,
}

pub fn decision_path(tree: &DecisionTree, state: &[f64]) -> Result<DecisionPath> {
    let trace = tree.trace(state)?;
    let mut steps = Vec::with_capacity(trace.len());
    let mut leaf = tree.root();
    for (node, branch) in trace {
        match (&tree.nodes()[node], branch) {
            (Node::Inner { predicate, .. }, Some(branch)) => steps.push(PathStep {
                node,
                predicate: predicate.display(tree.variables()),
                branch,
                label: predicate.edge_labels(tree.variables())[branch].clone(),
            }),
            _ => leaf = node,
        }
    }
    let Node::Leaf { actions, .. } = &tree.nodes()[leaf] else {
        unreachable!("trace ends in a leaf")
    };
    Ok(DecisionPath {
        steps,
        leaf,
        action_ids: actions.ids().to_vec(),
        actions: actions.labels(tree.labels()).map(str::to_string).collect(),
    })
}

/// Converts JSON state coordinates (numbers, or dictionary tokens for
/// categorical variables) into a state vector.
pub fn parse_state(values: &[Value], variables: &[VariableMeta]) -> Result<Vec<f64>> {
    if values.len() != variables.len() {
        return Err(Error::StateShape {
            expected: variables.len(),
            found: values.len(),
        });
    }
    values
        .iter()
        .zip(variables)
        .map(|(value, var)| match (var.kind, value) {
            (_, Value::Number(n)) => n
                .as_f64()
                .ok_or_else(|| Error::MalformedJson(format!("`{n}` is not a float"))),
            (VarKind::Categorical, Value::String(token)) => var
                .code_of(token)
                .map(|c| c as f64)
                .ok_or_else(|| Error::UnknownCategoricalValue {
                    variable: var.name.clone(),
                    value: token.clone(),
                }),
            (_, other) => Err(Error::MalformedJson(format!(
                "`{other}` is not a value of `{}`",
                var.name
            ))),
        })
        .collect()
}

#[derive(Deserialize)]
struct TransitionDoc {
    transitions: Vec<TransitionEntry>,
}

#[derive(Deserialize)]
struct TransitionEntry {
    state: Vec<Value>,
    action: String,
    successors: Vec<Vec<Value>>,
}

/// Successor lists keyed by (state, action label).
#[derive(Debug, Clone, Default)]
pub struct Transitions {
    map: HashMap<(StateKey, String), Vec<Vec<f64>>>,
}

impl Transitions {
    /// Parses `{"transitions":[{"state":[...],"action":"a","successors":[[...],...]}]}`.
    pub fn parse(text: &str, variables: &[VariableMeta]) -> Result<Self> {
        let doc: TransitionDoc = serde_json::from_str(text)?;
        let mut map = HashMap::new();
        for entry in doc.transitions {
            let state = parse_state(&entry.state, variables)?;
            let successors = entry
                .successors
                .iter()
                .map(|s| parse_state(s, variables))
                .collect::<Result<Vec<_>>>()?;
            map.entry((StateKey::of(&state), entry.action))
                .or_insert_with(Vec::new)
                .extend(successors);
        }
        Ok(Transitions { map })
    }

    pub fn successors(&self, state: &[f64], action: &str) -> Option<&[Vec<f64>]> {
        self.map
            .get(&(StateKey::of(state), action.to_string()))
            .map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub state: Vec<f64>,
    pub action: String,
    pub path: DecisionPath,
}

/// A run of the system under the tree's control. The operator picks an
/// allowed action at each step and supplies the successor state, or lets
/// the transitions table supply it when it is unique.
#[derive(Debug, Clone)]
pub struct Simulation {
    tree: DecisionTree,
    transitions: Option<Transitions>,
    current: Vec<f64>,
    trace: Vec<TraceEntry>,
}

impl Simulation {
    pub fn new(
        tree: DecisionTree,
        initial: Vec<f64>,
        transitions: Option<Transitions>,
    ) -> Result<Self> {
        decision_path(&tree, &initial)?;
        Ok(Simulation {
            tree,
            transitions,
            current: initial,
            trace: Vec::new(),
        })
    }

    pub fn tree(&self) -> &DecisionTree {
        &self.tree
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn current_path(&self) -> Result<DecisionPath> {
        decision_path(&self.tree, &self.current)
    }

    /// Successors the transitions table lists for `action` in the current state.
    pub fn successors(&self, action: &str) -> &[Vec<f64>] {
        self.transitions
            .as_ref()
            .and_then(|t| t.successors(&self.current, action))
            .unwrap_or(&[])
    }

    /// Takes `action` in the current state and moves to `next`, or to the
    /// only listed successor when `next` is omitted. Returns the decision
    /// path at the new state.
    pub fn step(&mut self, action: &str, next: Option<Vec<f64>>) -> Result<DecisionPath> {
        let path = self.current_path()?;
        if !path.actions.iter().any(|a| a == action) {
            return Err(Error::DisallowedAction(action.to_string()));
        }
        let listed = self.successors(action);
        let next = match next {
            Some(state) => {
                if !listed.is_empty()
                    && !listed
                        .iter()
                        .any(|s| StateKey::of(s) == StateKey::of(&state))
                {
                    return Err(Error::UnknownSuccessor(format!(
                        "{} is not a listed successor",
                        format_state(self.tree.variables(), &state)
                    )));
                }
                state
            }
            None => match listed {
                [only] => only.clone(),
                [] => {
                    return Err(Error::UnknownSuccessor(format!(
                        "no successor known for `{action}` in {}",
                        format_state(self.tree.variables(), &self.current)
                    )))
                }
                many => {
                    return Err(Error::UnknownSuccessor(format!(
                        "{} successors listed for `{action}`; choose one",
                        many.len()
                    )))
                }
            },
        };
        let next_path = decision_path(&self.tree, &next)?;
        let state = std::mem::replace(&mut self.current, next);
        self.trace.push(TraceEntry {
            state,
            action: action.to_string(),
            path,
        });
        Ok(next_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActionSet;
    use crate::testutil::{cruise, cruise_tree};

    #[test]
    fn example_two_path() {
        let c = cruise();
        let t = cruise_tree(&c);
        let p = decision_path(&t, &[4.0, 4.0, 10.0]).unwrap();
        let taken: Vec<_> = p.steps.iter().map(|s| (s.node, s.label.as_str())).collect();
        assert_eq!(taken, vec![(0, "false"), (1, "true")]);
        assert_eq!(p.actions, vec!["dec", "neu"]);
        assert_eq!(
            t.evaluate(&[4.0, 4.0, 10.0]).unwrap().ids(),
            p.action_ids.as_slice()
        );

        let p = decision_path(&t, &[0.0, 0.0, 5.0]).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].label, "true");
        assert_eq!(p.actions, vec!["neu"]);
    }

    #[test]
    fn single_leaf_path() {
        let t = DecisionTree::single_leaf(vec![], vec!["a".into()], ActionSet::singleton(0));
        let p = decision_path(&t, &[]).unwrap();
        assert!(p.steps.is_empty());
        assert_eq!(p.leaf, 0);
    }

    #[test]
    fn stepping() {
        let c = cruise();
        let mut sim = Simulation::new(cruise_tree(&c), vec![0.0, 0.0, 5.0], None).unwrap();
        sim.step("neu", Some(vec![0.0, 0.0, 5.0])).unwrap();
        assert_eq!(sim.trace().len(), 1);
        assert!(matches!(
            sim.step("neu", None),
            Err(Error::UnknownSuccessor(_))
        ));

        let mut sim = Simulation::new(cruise_tree(&c), vec![4.0, 4.0, 10.0], None).unwrap();
        assert_eq!(
            sim.step("acc", Some(vec![0.0; 3])),
            Err(Error::DisallowedAction("acc".into()))
        );
        assert!(sim.trace().is_empty());
    }

    #[test]
    fn transitions_file() {
        let c = cruise();
        let text = r#"{"transitions":[
            {"state":[2,6,10],"action":"acc","successors":[[4,6,9]]},
            {"state":[2,6,10],"action":"neu","successors":[[2,6,10],[4,6,9]]}]}"#;
        let tr = Transitions::parse(text, c.variables()).unwrap();
        let mut sim = Simulation::new(cruise_tree(&c), vec![2.0, 6.0, 10.0], Some(tr)).unwrap();
        assert!(matches!(
            sim.step("neu", None),
            Err(Error::UnknownSuccessor(_))
        ));
        assert!(matches!(
            sim.step("acc", Some(vec![0.0, 0.0, 5.0])),
            Err(Error::UnknownSuccessor(_))
        ));
        let p = sim.step("acc", None).unwrap();
        assert_eq!(sim.current(), &[4.0, 6.0, 9.0]);
        assert_eq!(sim.trace()[0].action, "acc");
        assert_eq!(p.actions, vec!["acc", "dec", "neu"]);
        for entry in sim.trace() {
            assert!(entry.path.actions.contains(&entry.action));
        }
    }

    #[test]
    fn categorical_tokens() {
        let vars = vec![
            VariableMeta::categorical("c", ["r", "g"]),
            VariableMeta::numeric("x"),
        ];
        let s = parse_state(&[Value::from("g"), Value::from(2.5)], &vars).unwrap();
        assert_eq!(s, vec![1.0, 2.5]);
        assert!(parse_state(&[Value::from("q"), Value::from(1)], &vars).is_err());
        assert!(parse_state(&[Value::from(1)], &vars).is_err());
    }
}
