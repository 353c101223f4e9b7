//! Tree induction: automatic construction, interactive sessions and
//! subtree retraining.

mod config;
mod select;
mod session;

use std::borrow::Cow;

pub use config::{parse_tolerance, BuildConfig, LeafMode};
pub use select::{
    gather_candidates, select_from, select_predicate, CandidatePool, CandidateSummary,
    ScoredCandidate,
};
pub use session::{
    BranchReport, EvalReport, NodeReport, Session, SessionNode, SessionSnapshot, VariableReport,
};

use crate::error::{Error, Result};
use crate::impurity::{branches_of, determinize_preprocess, Determinizer};
use crate::ingest::template::PredicateTemplate;
use crate::model::{ActionId, ActionSet, Controller, DecisionTree, Node, NodeView};
use crate::predicates::Predicate;

/// Outcome of examining one node during construction.
pub(crate) enum Step {
    Leaf(Node),
    Split(Predicate, Vec<Vec<usize>>),
}

/// The automatic construction rule shared by [`build_tree`], sessions and
/// retraining.
pub(crate) struct Grower<'a> {
    pub controller: &'a Controller,
    pub config: &'a BuildConfig,
    pub templates: &'a [PredicateTemplate],
}

impl<'a> Grower<'a> {
    pub fn new(
        controller: &'a Controller,
        config: &'a BuildConfig,
        templates: &'a [PredicateTemplate],
    ) -> Self {
        Grower {
            controller,
            config,
            templates,
        }
    }

    fn most_frequent(&self, actions: &[ActionId]) -> ActionId {
        *actions
            .iter()
            .max_by(|a, b| {
                self.controller
                    .action_frequency(**a)
                    .cmp(&self.controller.action_frequency(**b))
                    .then(b.cmp(a))
            })
            .expect("nonempty")
    }

    /// The leaf this view stops at, if any.
    pub fn stop(&self, view: &NodeView<'_>) -> Option<Node> {
        if self.config.determinizer == Determinizer::SafeEarlyStop {
            let common = view.common_actions();
            if !common.is_empty() {
                let actions = match self.config.leaf_mode {
                    LeafMode::Single => ActionSet::singleton(self.most_frequent(&common)),
                    LeafMode::CommonSet => ActionSet::new(common).expect("nonempty"),
                };
                return Some(Node::leaf(actions));
            }
        } else if view.is_pure() {
            return Some(Node::leaf(view.actions_at(0).clone()));
        }
        None
    }

    fn union_leaf(view: &NodeView<'_>) -> Node {
        Node::Leaf {
            actions: view.union_actions().expect("nonempty view"),
            inexact: true,
        }
    }

    /// Splits `view` with `pred` if every branch is nonempty.
    pub fn partition(view: &NodeView<'_>, pred: &Predicate) -> Result<Option<Vec<Vec<usize>>>> {
        let branches = branches_of(pred, view)?;
        let mut parts = vec![Vec::new(); pred.arity()];
        for (pos, b) in branches.into_iter().enumerate() {
            parts[b].push(view.rows()[pos]);
        }
        Ok(parts.iter().all(|p| !p.is_empty()).then_some(parts))
    }

    pub fn step(&self, view: &NodeView<'_>, depth: usize) -> Result<Step> {
        if let Some(leaf) = self.stop(view) {
            return Ok(Step::Leaf(leaf));
        }
        if self.config.max_depth.is_some_and(|max| depth >= max) {
            return Ok(Step::Leaf(Self::union_leaf(view)));
        }
        let pool = gather_candidates(view, self.config, self.templates)?;
        match select_from(&pool.candidates, view) {
            Ok(best) => match Self::partition(view, &best.predicate)? {
                Some(parts) => Ok(Step::Split(best.predicate, parts)),
                None => Ok(Step::Leaf(Self::union_leaf(view))),
            },
            Err(Error::NoValidPredicate) => Ok(Step::Leaf(Self::union_leaf(view))),
            Err(err) => Err(err),
        }
    }

    /// Grows a complete tree from `rows`, depth-first with the false child first.
    pub fn grow(&self, rows: Vec<usize>, depth: usize) -> Result<DecisionTree> {
        let mut nodes: Vec<Option<Node>> = vec![None];
        let mut stack = vec![(0usize, rows, depth)];
        while let Some((id, rows, depth)) = stack.pop() {
            let view = NodeView::new(self.controller, rows);
            match self.step(&view, depth)? {
                Step::Leaf(leaf) => nodes[id] = Some(leaf),
                Step::Split(predicate, parts) => {
                    let first = nodes.len();
                    nodes.extend((0..parts.len()).map(|_| None));
                    let children: Vec<usize> = (first..first + parts.len()).collect();
                    for (child, part) in children.iter().zip(parts).rev() {
                        stack.push((*child, part, depth + 1));
                    }
                    nodes[id] = Some(Node::Inner {
                        predicate,
                        children,
                    });
                }
            }
        }
        let nodes = nodes
            .into_iter()
            .map(|n| n.expect("every node decided"))
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

/// The controller the builder actually learns from: the input itself, or
/// its pre-processed determinization.
pub fn working_controller<'c>(
    controller: &'c Controller,
    config: &BuildConfig,
) -> Result<Cow<'c, Controller>> {
    if config.determinizer.is_preprocessing() {
        Ok(Cow::Owned(determinize_preprocess(
            controller,
            config.determinizer,
        )?))
    } else {
        Ok(Cow::Borrowed(controller))
    }
}

/// Learns a decision tree for `controller`.
///
/// Without a determinizer the tree reproduces every action set exactly;
/// otherwise every state is mapped to a nonempty subset of its allowed
/// actions. Nodes that cannot be separated (or that hit `max_depth`)
/// become leaves holding the union of their action sets and are counted in
/// [`TreeStats::inexact_leaves`](crate::model::TreeStats).
pub fn build_tree(controller: &Controller, config: &BuildConfig) -> Result<DecisionTree> {
    if controller.is_empty() {
        return Err(Error::EmptyController);
    }
    config.validate()?;
    let templates = config.parsed_templates()?;
    let working = working_controller(controller, config)?;
    Grower::new(&working, config, &templates).grow((0..working.len()).collect(), 0)
}

/// Rows of `controller` routed to `node` by the tree's predicates.
pub fn rows_reaching(
    tree: &DecisionTree,
    node: usize,
    controller: &Controller,
) -> Result<Vec<usize>> {
    let path = tree.path_to(node)?;
    let mut rows = Vec::new();
    'rows: for row in 0..controller.len() {
        let state = controller.state(row);
        for (inner, branch) in &path {
            let Node::Inner { predicate, .. } = tree.node(*inner)? else {
                unreachable!()
            };
            if predicate.eval_named(state, controller.variables())? != *branch {
                continue 'rows;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Rebuilds the subtree at `node` under `config` and splices it in. The
/// rest of the tree is kept as is (node ids are renumbered in pre-order).
pub fn retrain_subtree(
    tree: &DecisionTree,
    node: usize,
    controller: &Controller,
    config: &BuildConfig,
) -> Result<DecisionTree> {
    let depth = tree.path_to(node)?.len();
    let rows = rows_reaching(tree, node, controller)?;
    if rows.is_empty() {
        return Err(Error::EmptyController);
    }
    config.validate()?;
    let templates = config.parsed_templates()?;
    let working = working_controller(controller, config)?;
    let subtree = Grower::new(&working, config, &templates).grow(rows, depth)?;
    tree.splice(node, &subtree)
}
