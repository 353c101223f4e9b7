use serde::{Deserialize, Serialize};

use super::controller::{ActionSet, VariableMeta};
use crate::error::{Error, Result};
use crate::predicates::Predicate;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Inner {
        predicate: Predicate,
        children: Vec<NodeId>,
    },
    Leaf {
        actions: ActionSet,
        /// Set when the leaf stands for states that could not be separated.
        inexact: bool,
    },
}

impl Node {
    pub fn leaf(actions: ActionSet) -> Self {
        Node::Leaf {
            actions,
            inexact: false,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Inner { children, .. } => children,
            Node::Leaf { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub total_nodes: usize,
    pub inner_nodes: usize,
    pub leaves: usize,
    pub depth: usize,
    pub inexact_leaves: usize,
}

/// A decision tree over the variables and action labels of its source
/// controller. Nodes live in an arena; binary predicates send the false
/// branch to child 0 and the true branch to child 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    variables: Vec<VariableMeta>,
    labels: Vec<String>,
    nodes: Vec<Node>,
    root: NodeId,
}

impl DecisionTree {
    /// Validates shape: every node reachable exactly once from `root`,
    /// child counts matching predicate arity, action ids within the label table.
    pub fn new(
        variables: Vec<VariableMeta>,
        labels: Vec<String>,
        nodes: Vec<Node>,
        root: NodeId,
    ) -> Result<Self> {
        let tree = DecisionTree {
            variables,
            labels,
            nodes,
            root,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn single_leaf(
        variables: Vec<VariableMeta>,
        labels: Vec<String>,
        actions: ActionSet,
    ) -> Self {
        DecisionTree {
            variables,
            labels,
            nodes: vec![Node::leaf(actions)],
            root: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedJson(msg));
        if self.root >= self.nodes.len() {
            return bad(format!("root {} out of range", self.root));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let Some(node) = self.nodes.get(id) else {
                return bad(format!("child {id} out of range"));
            };
            if std::mem::replace(&mut seen[id], true) {
                return bad(format!("node {id} has more than one parent"));
            }
            match node {
                Node::Inner {
                    predicate,
                    children,
                } => {
                    if children.len() != predicate.arity() {
                        return bad(format!(
                            "node {id} has {} children for a predicate of arity {}",
                            children.len(),
                            predicate.arity()
                        ));
                    }
                    stack.extend(children.iter().rev());
                }
                Node::Leaf { actions, .. } => {
                    if let Some(id) = actions
                        .ids()
                        .iter()
                        .find(|a| **a as usize >= self.labels.len())
                    {
                        return bad(format!("action id {id} has no label"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    /// Pre-order node ids starting at `from`.
    pub fn preorder(&self, from: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children().iter().rev());
        }
        out
    }

    /// Leaf reached by `state` and the branch taken at every inner node.
    pub fn trace(&self, state: &[f64]) -> Result<Vec<(NodeId, Option<usize>)>> {
        let mut path = Vec::new();
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => {
                    path.push((id, None));
                    return Ok(path);
                }
                Node::Inner {
                    predicate,
                    children,
                } => {
                    let branch = predicate.eval_named(state, &self.variables)?;
                    path.push((id, Some(branch)));
                    id = children[branch];
                }
            }
        }
    }

    pub fn evaluate(&self, state: &[f64]) -> Result<&ActionSet> {
        let (leaf, _) = *self.trace(state)?.last().expect("path ends in a leaf");
        match &self.nodes[leaf] {
            Node::Leaf { actions, .. } => Ok(actions),
            Node::Inner { .. } => unreachable!(),
        }
    }

    pub fn stats(&self) -> TreeStats {
        let mut stats = TreeStats {
            total_nodes: 0,
            inner_nodes: 0,
            leaves: 0,
            depth: 0,
            inexact_leaves: 0,
        };
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            stats.total_nodes += 1;
            stats.depth = stats.depth.max(depth);
            match &self.nodes[id] {
                Node::Inner { children, .. } => {
                    stats.inner_nodes += 1;
                    stack.extend(children.iter().map(|c| (*c, depth + 1)));
                }
                Node::Leaf { inexact, .. } => {
                    stats.leaves += 1;
                    stats.inexact_leaves += usize::from(*inexact);
                }
            }
        }
        stats
    }

    /// Path from the root to `target` as (inner node, branch) pairs.
    pub fn path_to(&self, target: NodeId) -> Result<Vec<(NodeId, usize)>> {
        fn walk(
            t: &DecisionTree,
            id: NodeId,
            target: NodeId,
            path: &mut Vec<(NodeId, usize)>,
        ) -> bool {
            if id == target {
                return true;
            }
            for (b, c) in t.nodes[id].children().iter().enumerate() {
                path.push((id, b));
                if walk(t, *c, target, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        let mut path = Vec::new();
        if target < self.nodes.len() && walk(self, self.root, target, &mut path) {
            Ok(path)
        } else {
            Err(Error::UnknownNode(target))
        }
    }

    /// Copy with nodes renumbered in pre-order (root = 0) and unreachable nodes dropped.
    pub fn compact(&self) -> DecisionTree {
        let order = self.preorder(self.root);
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        for (i, id) in order.iter().enumerate() {
            new_id[*id] = i;
        }
        let nodes = order
            .iter()
            .map(|id| match &self.nodes[*id] {
                Node::Inner {
                    predicate,
                    children,
                } => Node::Inner {
                    predicate: predicate.clone(),
                    children: children.iter().map(|c| new_id[*c]).collect(),
                },
                leaf => leaf.clone(),
            })
            .collect();
        DecisionTree {
            variables: self.variables.clone(),
            labels: self.labels.clone(),
            nodes,
            root: 0,
        }
    }

    /// Replaces the subtree at `at` by `other` (which must share the label
    /// table) and returns the compacted result.
    pub fn splice(&self, at: NodeId, other: &DecisionTree) -> Result<DecisionTree> {
        self.node(at)?;
        let mut nodes = self.nodes.clone();
        let offset = nodes.len();
        for node in &other.nodes {
            nodes.push(match node {
                Node::Inner {
                    predicate,
                    children,
                } => Node::Inner {
                    predicate: predicate.clone(),
                    children: children.iter().map(|c| c + offset).collect(),
                },
                leaf => leaf.clone(),
            });
        }
        let new_root = other.root + offset;
        let root = if at == self.root {
            new_root
        } else {
            for node in &mut nodes[..offset] {
                if let Node::Inner { children, .. } = node {
                    for c in children.iter_mut().filter(|c| **c == at) {
                        *c = new_root;
                    }
                }
            }
            self.root
        };
        Ok(DecisionTree {
            variables: self.variables.clone(),
            labels: self.labels.clone(),
            nodes,
            root,
        }
        .compact())
    }
}

pub fn evaluate_tree<'t>(tree: &'t DecisionTree, state: &[f64]) -> Result<&'t ActionSet> {
    tree.evaluate(state)
}

pub fn tree_stats(tree: &DecisionTree) -> TreeStats {
    tree.stats()
}
