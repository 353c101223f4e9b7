//! Turn memoryless controllers into small decision trees.
//!
//! A [`Controller`] maps each state to a nonempty set of allowed actions.
//! [`build_tree`] learns a [`DecisionTree`] that represents it exactly or,
//! under a [`Determinizer`], with a nonempty subset of the allowed actions in
//! every state. Trees can be exported to JSON, DOT and C.

pub mod bench;
pub mod builder;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod export;
pub mod impurity;
pub mod ingest;
pub mod model;
pub mod predicates;
#[cfg(feature = "service")]
pub mod service;
pub mod simulate;

#[cfg(test)]
pub(crate) mod testutil;

pub use builder::{build_tree, retrain_subtree, select_predicate, BuildConfig, LeafMode, Session};
pub use error::{Error, Result};
pub use impurity::{Determinizer, ImpurityMeasure};
pub use model::{
    evaluate_tree, tree_stats, ActionId, ActionSet, Controller, ControllerBuilder, DecisionTree,
    Node, NodeId, NodeView, StateVector, TreeStats, VarKind, VariableMeta,
};
pub use predicates::Predicate;
