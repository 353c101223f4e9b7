use std::sync::Arc;

use serde::Serialize;

use super::select::{gather_candidates, rank, CandidateSummary};
use super::{working_controller, BuildConfig, Grower, Step};
use crate::error::{Error, Result};
use crate::impurity::{branches_of, partition_impurity};
use crate::ingest::expr::{parse_comparison, Comparator, Expr};
use crate::ingest::template::PredicateTemplate;
use crate::model::{ActionSet, Controller, DecisionTree, Node, NodeId, NodeView};
use crate::predicates::{DomainKind, DroppedCandidate, Predicate};

/// Number of automatic candidates listed in a [`NodeReport`].
pub const REPORT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum SessionNode {
    Open,
    Inner {
        predicate: Predicate,
        children: Vec<NodeId>,
    },
    Leaf {
        actions: ActionSet,
        inexact: bool,
    },
    /// Removed by a `goto` on an ancestor; ids are never reused.
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VariableReport {
    Numeric {
        name: String,
        min: f64,
        max: f64,
        /// Smallest gap between consecutive distinct values; 0 if constant.
        step: f64,
    },
    Categorical {
        name: String,
        values: Vec<(String, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub node_id: NodeId,
    pub depth: usize,
    pub size: usize,
    pub variables: Vec<VariableReport>,
    /// Number of states per distinct action set.
    pub label_histogram: Vec<(Vec<String>, usize)>,
    /// Number of states allowing each action.
    pub action_histogram: Vec<(String, usize)>,
    pub common_actions: Vec<String>,
    pub candidates: Vec<CandidateSummary>,
    pub template_candidates: Vec<CandidateSummary>,
    pub dropped: Vec<DroppedCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub label: String,
    pub size: usize,
    pub common_actions: Vec<String>,
}

/// Effect of a predicate on the cursor node. Infinite impurities
/// serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub predicate: String,
    pub impurity: f64,
    pub branches: Vec<BranchReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotNode {
    pub id: NodeId,
    pub state: &'static str,
    pub size: usize,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub edge_labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub inexact: bool,
}

/// Serializable view of a partially built tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSnapshot {
    pub root: NodeId,
    pub cursor: Option<NodeId>,
    pub complete: bool,
    pub nodes: Vec<SnapshotNode>,
}

/// Interactive, step-by-step tree construction.
///
/// Open nodes wait on a depth-first frontier; the cursor is its top. Node
/// ids are arena indices and stay valid until discarded by [`Session::goto`].
#[derive(Debug, Clone)]
pub struct Session {
    controller: Arc<Controller>,
    config: BuildConfig,
    templates: Vec<PredicateTemplate>,
    nodes: Vec<SessionNode>,
    rows: Vec<Vec<usize>>,
    depth: Vec<usize>,
    frontier: Vec<NodeId>,
}

fn labels_of(controller: &Controller, ids: impl IntoIterator<Item = u32>) -> Vec<String> {
    ids.into_iter()
        .map(|id| controller.labels()[id as usize].clone())
        .collect()
}

impl Session {
    pub fn new(controller: &Controller, config: BuildConfig) -> Result<Self> {
        if controller.is_empty() {
            return Err(Error::EmptyController);
        }
        config.validate()?;
        let templates = config.parsed_templates()?;
        let working = working_controller(controller, &config)?.into_owned();
        let n = working.len();
        Ok(Session {
            controller: Arc::new(working),
            config,
            templates,
            nodes: vec![SessionNode::Open],
            rows: vec![(0..n).collect()],
            depth: vec![0],
            frontier: vec![0],
        })
    }

    /// The controller the session learns from (determinized if configured).
    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn cursor(&self) -> Option<NodeId> {
        self.frontier.last().copied()
    }

    pub fn is_complete(&self) -> bool {
        self.frontier.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&SessionNode> {
        match self.nodes.get(id) {
            Some(SessionNode::Discarded) | None => Err(Error::UnknownNode(id)),
            Some(node) => Ok(node),
        }
    }

    pub fn view(&self, id: NodeId) -> Result<NodeView<'_>> {
        self.node(id)?;
        Ok(NodeView::new(&self.controller, self.rows[id].clone()))
    }

    fn grower(&self) -> Grower<'_> {
        Grower::new(&self.controller, &self.config, &self.templates)
    }

    fn cursor_view(&self) -> Result<(NodeId, NodeView<'_>)> {
        let id = self.cursor().ok_or(Error::SessionClosed)?;
        Ok((id, self.view(id)?))
    }

    pub fn node_report(&self) -> Result<NodeReport> {
        self.node_report_top(REPORT_TOP_K)
    }

    pub fn node_report_top(&self, k: usize) -> Result<NodeReport> {
        let (id, view) = self.cursor_view()?;
        let c = &*self.controller;
        let variables = c
            .variables()
            .iter()
            .enumerate()
            .map(|(i, meta)| {
                let mut values: Vec<f64> = (0..view.len()).map(|p| view.state_at(p)[i]).collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                if meta.is_numeric() {
                    let step = values
                        .windows(2)
                        .map(|w| w[1] - w[0])
                        .fold(f64::INFINITY, f64::min);
                    VariableReport::Numeric {
                        name: meta.name.clone(),
                        min: values[0],
                        max: values[values.len() - 1],
                        step: if step.is_finite() { step } else { 0.0 },
                    }
                } else {
                    let counts = values
                        .iter()
                        .map(|v| {
                            let n = (0..view.len())
                                .filter(|p| view.state_at(*p)[i] == *v)
                                .count();
                            (meta.render(*v), n)
                        })
                        .collect();
                    VariableReport::Categorical {
                        name: meta.name.clone(),
                        values: counts,
                    }
                }
            })
            .collect();
        let label_histogram = view
            .label_counts()
            .into_iter()
            .map(|(set, n)| (labels_of(c, set.ids().iter().copied()), n))
            .collect();
        let action_histogram = view
            .action_counts()
            .iter()
            .enumerate()
            .filter(|(_, n)| **n > 0)
            .map(|(a, n)| (c.labels()[a].clone(), *n))
            .collect();

        let mut pool = gather_candidates(&view, &self.config, &self.templates)?;
        pool.candidates.sort_by(|a, b| rank(a, b, &view));
        let (templated, automatic): (Vec<_>, Vec<_>) = pool
            .candidates
            .iter()
            .partition(|c| c.predicate.domain_kind() == DomainKind::Template);
        Ok(NodeReport {
            node_id: id,
            depth: self.depth[id],
            size: view.len(),
            variables,
            label_histogram,
            action_histogram,
            common_actions: labels_of(c, view.common_actions()),
            candidates: automatic.iter().take(k).map(|s| s.summary(&view)).collect(),
            template_candidates: templated.iter().map(|s| s.summary(&view)).collect(),
            dropped: pool.dropped,
        })
    }

    /// Parses a user predicate against the session's variables: either a
    /// comparison (`v_o <= 0`, `d + (v_f - v_o) * 1.5 > 5`) or a grouping of
    /// a categorical variable (`colour in {r, g} | {b}`).
    pub fn parse_predicate(&self, text: &str) -> Result<Predicate> {
        let vars = self.controller.variables();
        if let Some(pred) = parse_grouping(
            text,
            vars,
            self.cursor().map(|id| &self.rows[id][..]),
            &self.controller,
        )? {
            return Ok(pred);
        }
        let (lhs, comparator, rhs) = parse_comparison(text)?;
        let lhs = lhs.bind(vars, &|_| None)?;
        let rhs = rhs.bind(vars, &|_| None)?;
        if let (Expr::Var { index, .. }, Comparator::Le, Expr::Num(threshold)) =
            (&lhs, comparator, &rhs)
        {
            return Ok(Predicate::AxisAligned {
                var: *index,
                threshold: *threshold,
            });
        }
        Ok(Predicate::Algebraic {
            lhs,
            comparator,
            rhs,
            provenance: "user".into(),
        })
    }

    /// Scores a predicate on the cursor node without changing the session.
    pub fn evaluate(&self, pred: &Predicate) -> Result<EvalReport> {
        let (_, view) = self.cursor_view()?;
        let branches = branches_of(pred, &view)?;
        let parts = view.branch_histograms(&branches, pred.arity());
        let impurity = partition_impurity(self.config.measure, &parts);
        let vars = self.controller.variables();
        let reports = view
            .partition(&branches, pred.arity())
            .iter()
            .zip(pred.edge_labels(vars))
            .map(|(child, label)| BranchReport {
                label,
                size: child.len(),
                common_actions: labels_of(&self.controller, child.common_actions()),
            })
            .collect();
        Ok(EvalReport {
            predicate: pred.display(vars),
            impurity,
            branches: reports,
        })
    }

    pub fn evaluate_text(&self, text: &str) -> Result<EvalReport> {
        let pred = self.parse_predicate(text)?;
        self.evaluate(&pred)
    }

    /// Splits the cursor node. Children meeting the stopping rule close
    /// immediately; the rest join the frontier, false branch first.
    pub fn apply(&mut self, pred: Predicate) -> Result<Vec<NodeId>> {
        let (id, view) = self.cursor_view()?;
        let parts = Grower::partition(&view, &pred)?.ok_or_else(|| {
            Error::InvalidPredicate(format!(
                "`{}` leaves a branch empty",
                pred.display(self.controller.variables())
            ))
        })?;
        drop(view);
        self.frontier.pop();
        let children = self.attach(id, pred, parts);
        for child in children.iter().rev() {
            let view = NodeView::new(&self.controller, self.rows[*child].clone());
            match self.grower().stop(&view) {
                Some(leaf) => self.nodes[*child] = session_leaf(leaf),
                None => self.frontier.push(*child),
            }
        }
        Ok(children)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<Vec<NodeId>> {
        let pred = self.parse_predicate(text)?;
        self.apply(pred)
    }

    fn attach(&mut self, id: NodeId, predicate: Predicate, parts: Vec<Vec<usize>>) -> Vec<NodeId> {
        let depth = self.depth[id] + 1;
        let children: Vec<NodeId> = parts
            .into_iter()
            .map(|rows| {
                self.nodes.push(SessionNode::Open);
                self.rows.push(rows);
                self.depth.push(depth);
                self.nodes.len() - 1
            })
            .collect();
        self.nodes[id] = SessionNode::Inner {
            predicate,
            children: children.clone(),
        };
        children
    }

    /// Finishes every open node with the automatic construction rule.
    pub fn autocomplete(&mut self) -> Result<()> {
        while let Some(id) = self.frontier.pop() {
            let view = NodeView::new(&self.controller, self.rows[id].clone());
            let step = self.grower().step(&view, self.depth[id]);
            match step {
                Ok(Step::Leaf(leaf)) => self.nodes[id] = session_leaf(leaf),
                Ok(Step::Split(pred, parts)) => {
                    let children = self.attach(id, pred, parts);
                    self.frontier.extend(children.iter().rev());
                }
                Err(err) => {
                    self.frontier.push(id);
                    return Err(err);
                }
            }
        }
        Ok(())
    }

    /// Discards the subtree below `id` and reopens `id` as the cursor.
    pub fn goto(&mut self, id: NodeId) -> Result<()> {
        self.node(id)?;
        let mut stack = match &self.nodes[id] {
            SessionNode::Inner { children, .. } => children.clone(),
            _ => Vec::new(),
        };
        while let Some(n) = stack.pop() {
            if let SessionNode::Inner { children, .. } = &self.nodes[n] {
                stack.extend(children);
            }
            self.nodes[n] = SessionNode::Discarded;
        }
        self.nodes[id] = SessionNode::Open;
        let nodes = &self.nodes;
        self.frontier
            .retain(|n| *n != id && !matches!(nodes[*n], SessionNode::Discarded));
        self.frontier.push(id);
        Ok(())
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let vars = self.controller.variables();
        let mut nodes = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            let mut node = SnapshotNode {
                id,
                state: "open",
                size: self.rows[id].len(),
                depth: self.depth[id],
                predicate: None,
                children: Vec::new(),
                edge_labels: Vec::new(),
                actions: None,
                inexact: false,
            };
            match &self.nodes[id] {
                SessionNode::Inner {
                    predicate,
                    children,
                } => {
                    node.state = "inner";
                    node.predicate = Some(predicate.display(vars));
                    node.children = children.clone();
                    node.edge_labels = predicate.edge_labels(vars);
                    stack.extend(children.iter().rev());
                }
                SessionNode::Leaf { actions, inexact } => {
                    node.state = "leaf";
                    node.actions = Some(labels_of(&self.controller, actions.ids().iter().copied()));
                    node.inexact = *inexact;
                }
                SessionNode::Open | SessionNode::Discarded => {}
            }
            nodes.push(node);
        }
        SessionSnapshot {
            root: 0,
            cursor: self.cursor(),
            complete: self.is_complete(),
            nodes,
        }
    }

    /// The finished tree, renumbered in pre-order.
    pub fn tree(&self) -> Result<DecisionTree> {
        if !self.frontier.is_empty() {
            return Err(Error::IncompleteTree(self.frontier.len()));
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                SessionNode::Inner {
                    predicate,
                    children,
                } => Node::Inner {
                    predicate: predicate.clone(),
                    children: children.clone(),
                },
                SessionNode::Leaf { actions, inexact } => Node::Leaf {
                    actions: actions.clone(),
                    inexact: *inexact,
                },
                // unreachable from the root once the frontier is empty
                SessionNode::Open | SessionNode::Discarded => Node::leaf(ActionSet::singleton(0)),
            })
            .collect();
        Ok(DecisionTree::new(
            self.controller.variables().to_vec(),
            self.controller.labels().to_vec(),
            nodes,
            0,
        )?
        .compact())
    }
}

fn session_leaf(node: Node) -> SessionNode {
    match node {
        Node::Leaf { actions, inexact } => SessionNode::Leaf { actions, inexact },
        Node::Inner { .. } => unreachable!("stopping rule yields leaves"),
    }
}

/// `name in {a, b} | {c}`; values absent from the text but present in the
/// dictionary join the group with the most states of the cursor node.
fn parse_grouping(
    text: &str,
    vars: &[crate::model::VariableMeta],
    rows: Option<&[usize]>,
    controller: &Controller,
) -> Result<Option<Predicate>> {
    let Some((name, rest)) = text.split_once(" in ") else {
        return Ok(None);
    };
    let name = name.trim();
    let Some(var) = vars.iter().position(|v| v.name == name) else {
        return Ok(None);
    };
    let meta = &vars[var];
    if !meta.is_categorical() {
        return Err(Error::InvalidPredicate(format!(
            "`{name}` is not categorical"
        )));
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for part in rest.split('|') {
        let inner = part
            .trim()
            .strip_prefix('{')
            .and_then(|p| p.strip_suffix('}'))
            .ok_or_else(|| {
                Error::InvalidPredicate(format!("expected `{{...}}`, found `{}`", part.trim()))
            })?;
        let mut group = Vec::new();
        for token in inner.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let code = meta
                .code_of(token)
                .ok_or_else(|| Error::UnknownCategoricalValue {
                    variable: name.to_string(),
                    value: token.to_string(),
                })?;
            if groups.iter().chain([&group]).any(|g| g.contains(&code)) {
                return Err(Error::InvalidPredicate(format!("`{token}` appears twice")));
            }
            group.push(code);
        }
        if group.is_empty() {
            return Err(Error::InvalidPredicate("empty value group".into()));
        }
        groups.push(group);
    }
    if groups.len() < 2 {
        return Err(Error::InvalidPredicate(
            "a grouping needs at least two groups".into(),
        ));
    }
    let weight = |g: &Vec<usize>| {
        rows.unwrap_or(&[])
            .iter()
            .filter(|r| g.contains(&(controller.state(**r)[var] as usize)))
            .count()
    };
    let largest = (0..groups.len())
        .max_by(|a, b| weight(&groups[*a]).cmp(&weight(&groups[*b])).then(b.cmp(a)))
        .expect("two groups");
    for code in 0..meta.dictionary.len() {
        if !groups.iter().any(|g| g.contains(&code)) {
            groups[largest].push(code);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(Some(Predicate::Categorical { var, groups }))
}
