//! Controllers, node views and decision trees.

mod controller;
mod tree;
mod view;

pub(crate) use controller::StateKey;
pub use controller::{
    format_state, validate_variables, ActionId, ActionSet, Controller, ControllerBuilder,
    StateVector, VarKind, VariableMeta,
};
pub use tree::{evaluate_tree, tree_stats, DecisionTree, Node, NodeId, TreeStats};
pub use view::{Histogram, NodeView};
