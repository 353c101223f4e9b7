use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric coordinates are plain floats; categorical coordinates hold the
/// index of the value token in the variable's dictionary.
pub type StateVector = Vec<f64>;

pub type ActionId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub kind: VarKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dictionary: Vec<String>,
}

impl VariableMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        VariableMeta {
            name: name.into(),
            kind: VarKind::Numeric,
            dictionary: Vec::new(),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        dictionary: impl IntoIterator<Item = S>,
    ) -> Self {
        VariableMeta {
            name: name.into(),
            kind: VarKind::Categorical,
            dictionary: dictionary.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == VarKind::Numeric
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == VarKind::Categorical
    }

    pub fn code_of(&self, token: &str) -> Option<usize> {
        self.dictionary.iter().position(|t| t == token)
    }

    /// Token for a categorical code, or the formatted number for numeric variables.
    pub fn render(&self, value: f64) -> String {
        match self.kind {
            VarKind::Numeric => format!("{value}"),
            VarKind::Categorical => self
                .dictionary
                .get(value as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{value}")),
        }
    }
}

/// Checks the metadata invariants: unique names, nonempty duplicate-free dictionaries.
pub fn validate_variables(variables: &[VariableMeta]) -> Result<()> {
    let mut names = BTreeSet::new();
    for var in variables {
        if !names.insert(var.name.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "duplicate variable name `{}`",
                var.name
            )));
        }
        if var.is_categorical() {
            if var.dictionary.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "empty dictionary for `{}`",
                    var.name
                )));
            }
            let distinct: BTreeSet<_> = var.dictionary.iter().collect();
            if distinct.len() != var.dictionary.len() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate dictionary entries for `{}`",
                    var.name
                )));
            }
        }
    }
    Ok(())
}

/// A nonempty, sorted, duplicate-free set of interned action ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionSet(Vec<ActionId>);

impl ActionSet {
    /// Returns `None` for an empty input.
    pub fn new(ids: impl IntoIterator<Item = ActionId>) -> Option<Self> {
        let mut ids: Vec<ActionId> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            None
        } else {
            Some(ActionSet(ids))
        }
    }

    pub fn singleton(id: ActionId) -> Self {
        ActionSet(vec![id])
    }

    pub fn ids(&self) -> &[ActionId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: ActionId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_subset(&self, other: &ActionSet) -> bool {
        self.0.iter().all(|id| other.contains(*id))
    }

    pub fn union(&self, other: &ActionSet) -> ActionSet {
        ActionSet::new(self.0.iter().chain(other.0.iter()).copied())
            .expect("union of nonempty sets")
    }

    pub fn labels<'a>(&'a self, table: &'a [String]) -> impl Iterator<Item = &'a str> + 'a {
        self.0.iter().map(move |id| table[*id as usize].as_str())
    }

    pub fn display(&self, table: &[String]) -> String {
        let inner: Vec<&str> = self.labels(table).collect();
        format!("{{{}}}", inner.join(", "))
    }
}

/// Hashable view of a state vector (bitwise, with `-0.0` folded into `0.0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct StateKey(Vec<u64>);

impl StateKey {
    pub(crate) fn of(state: &[f64]) -> Self {
        StateKey(
            state
                .iter()
                .map(|v| if *v == 0.0 { 0u64 } else { v.to_bits() })
                .collect(),
        )
    }
}

pub(crate) fn cmp_states(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// A memoryless, possibly permissive controller: a finite map from states to
/// nonempty sets of allowed actions.
///
/// Rows are kept sorted by state and labels sorted lexicographically, so two
/// controllers built from the same rows in any order compare equal.
#[derive(Debug, Clone)]
pub struct Controller {
    variables: Vec<VariableMeta>,
    labels: Vec<String>,
    states: Vec<StateVector>,
    actions: Vec<ActionSet>,
    permissive: bool,
    index: HashMap<StateKey, usize>,
    set_of_row: Vec<u32>,
    sets: Vec<ActionSet>,
    action_freq: Vec<usize>,
}

impl PartialEq for Controller {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
            && self.labels == other.labels
            && self.permissive == other.permissive
            && self.actions == other.actions
            && self.states.len() == other.states.len()
            && self
                .states
                .iter()
                .zip(&other.states)
                .all(|(a, b)| StateKey::of(a) == StateKey::of(b))
    }
}

impl Controller {
    /// Builds a controller from already-interned rows. Rows with identical
    /// states are merged by union.
    pub fn new(
        variables: Vec<VariableMeta>,
        labels: Vec<String>,
        rows: Vec<(StateVector, ActionSet)>,
        permissive: bool,
    ) -> Result<Self> {
        validate_variables(&variables)?;
        let mut builder = ControllerBuilder::new(variables);
        for (state, set) in rows {
            let tokens: Vec<&str> =
                set.ids()
                    .iter()
                    .map(|id| {
                        labels.get(*id as usize).map(String::as_str).ok_or_else(|| {
                            Error::InvalidConfig(format!("action id {id} has no label"))
                        })
                    })
                    .collect::<Result<_>>()?;
            builder.insert(state, tokens)?;
        }
        for label in &labels {
            builder.declare_label(label);
        }
        builder.finish(permissive)
    }

    fn assemble(
        variables: Vec<VariableMeta>,
        labels: Vec<String>,
        mut rows: Vec<(StateVector, ActionSet)>,
        permissive: bool,
    ) -> Result<Self> {
        rows.sort_by(|a, b| cmp_states(&a.0, &b.0));
        if !permissive {
            if let Some((_, set)) = rows.iter().find(|(_, set)| set.len() > 1) {
                return Err(Error::InvalidConfig(format!(
                    "non-permissive controller has multi-action row {}",
                    set.display(&labels)
                )));
            }
        }
        let mut index = HashMap::with_capacity(rows.len());
        let mut states = Vec::with_capacity(rows.len());
        let mut actions = Vec::with_capacity(rows.len());
        for (i, (state, set)) in rows.into_iter().enumerate() {
            index.insert(StateKey::of(&state), i);
            states.push(state);
            actions.push(set);
        }
        let mut sets: Vec<ActionSet> = actions.clone();
        sets.sort();
        sets.dedup();
        let set_of_row = actions
            .iter()
            .map(|a| sets.binary_search(a).expect("set present") as u32)
            .collect();
        let mut action_freq = vec![0usize; labels.len()];
        for set in &actions {
            for id in set.ids() {
                action_freq[*id as usize] += 1;
            }
        }
        Ok(Controller {
            variables,
            labels,
            states,
            actions,
            permissive,
            index,
            set_of_row,
            sets,
            action_freq,
        })
    }

    /// Same states and labels, different action sets (used by determinizers).
    pub(crate) fn with_actions(&self, actions: Vec<ActionSet>, permissive: bool) -> Result<Self> {
        let rows = self.states.iter().cloned().zip(actions).collect();
        Controller::assemble(
            self.variables.clone(),
            self.labels.clone(),
            rows,
            permissive,
        )
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_id(&self, label: &str) -> Option<ActionId> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| i as ActionId)
    }

    pub fn is_permissive(&self) -> bool {
        self.permissive
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, row: usize) -> &[f64] {
        &self.states[row]
    }

    pub fn actions(&self, row: usize) -> &ActionSet {
        &self.actions[row]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], &ActionSet)> {
        self.states.iter().map(Vec::as_slice).zip(&self.actions)
    }

    /// Index into [`Controller::distinct_sets`] for a row.
    pub fn set_id(&self, row: usize) -> u32 {
        self.set_of_row[row]
    }

    pub fn distinct_sets(&self) -> &[ActionSet] {
        &self.sets
    }

    /// Number of rows whose action set contains the action.
    pub fn action_frequency(&self, id: ActionId) -> usize {
        self.action_freq[id as usize]
    }

    pub fn lookup(&self, state: &[f64]) -> Result<&ActionSet> {
        self.row_of(state)
            .map(|row| &self.actions[row])
            .ok_or(Error::StateNotFound)
    }

    pub fn row_of(&self, state: &[f64]) -> Option<usize> {
        self.index.get(&StateKey::of(state)).copied()
    }

    pub fn format_set(&self, set: &ActionSet) -> String {
        set.display(&self.labels)
    }

    /// Renders a state with categorical codes replaced by their tokens.
    pub fn format_state(&self, state: &[f64]) -> String {
        format_state(&self.variables, state)
    }
}

pub fn format_state(variables: &[VariableMeta], state: &[f64]) -> String {
    let parts: Vec<String> = variables
        .iter()
        .zip(state)
        .map(|(var, v)| var.render(*v))
        .collect();
    format!("({})", parts.join(", "))
}

/// Accumulates rows keyed by state; duplicate states merge their action labels.
#[derive(Debug, Clone)]
pub struct ControllerBuilder {
    variables: Vec<VariableMeta>,
    rows: Vec<(StateVector, BTreeSet<String>)>,
    index: HashMap<StateKey, usize>,
    extra_labels: BTreeSet<String>,
}

impl ControllerBuilder {
    pub fn new(variables: Vec<VariableMeta>) -> Self {
        ControllerBuilder {
            variables,
            rows: Vec::new(),
            index: HashMap::new(),
            extra_labels: BTreeSet::new(),
        }
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn variables_mut(&mut self) -> &mut Vec<VariableMeta> {
        &mut self.variables
    }

    pub fn contains(&self, state: &[f64]) -> bool {
        self.index.contains_key(&StateKey::of(state))
    }

    /// Keeps a label in the table even if no row uses it.
    pub fn declare_label(&mut self, label: &str) {
        self.extra_labels.insert(label.to_string());
    }

    pub fn insert<S: AsRef<str>>(
        &mut self,
        state: StateVector,
        actions: impl IntoIterator<Item = S>,
    ) -> Result<()> {
        self.check_state(&state)?;
        let key = StateKey::of(&state);
        let row = match self.index.get(&key) {
            Some(row) => *row,
            None => {
                self.index.insert(key, self.rows.len());
                self.rows.push((state, BTreeSet::new()));
                self.rows.len() - 1
            }
        };
        for action in actions {
            self.rows[row].1.insert(action.as_ref().to_string());
        }
        Ok(())
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.variables.len() {
            return Err(Error::StateShape {
                expected: self.variables.len(),
                found: state.len(),
            });
        }
        for (var, value) in self.variables.iter().zip(state) {
            if !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "non-finite value for `{}`",
                    var.name
                )));
            }
            if var.is_categorical()
                && (value.fract() != 0.0 || *value < 0.0 || *value as usize >= var.dictionary.len())
            {
                return Err(Error::UnknownCategoricalValue {
                    variable: var.name.clone(),
                    value: format!("{value}"),
                });
            }
        }
        Ok(())
    }

    pub fn finish(self, permissive: bool) -> Result<Controller> {
        validate_variables(&self.variables)?;
        let mut labels: BTreeSet<String> = self.extra_labels;
        for (_, set) in &self.rows {
            labels.extend(set.iter().cloned());
        }
        let labels: Vec<String> = labels.into_iter().collect();
        let mut rows = Vec::with_capacity(self.rows.len());
        for (state, set) in self.rows {
            let ids = set
                .iter()
                .map(|l| labels.binary_search(l).expect("label interned") as ActionId);
            let set = ActionSet::new(ids)
                .ok_or_else(|| Error::InvalidConfig("row with no actions".into()))?;
            rows.push((state, set));
        }
        Controller::assemble(self.variables, labels, rows, permissive)
    }
}

impl fmt::Display for Controller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (state, set) in self.rows() {
            writeln!(
                f,
                "{} -> {}",
                self.format_state(state),
                self.format_set(set)
            )?;
        }
        Ok(())
    }
}
