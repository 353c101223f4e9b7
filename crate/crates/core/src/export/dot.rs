use std::fmt::Write as _;

use crate::model::{DecisionTree, Node};

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph. Node names are arena ids; binary edges are labelled
/// `false`/`true`, categorical edges with their value group.
pub fn export_dot(tree: &DecisionTree) -> String {
    let mut out = String::from("digraph tree {\n    node [fontname=\"Helvetica\"];\n");
    for id in tree.preorder(tree.root()) {
        match &tree.nodes()[id] {
            Node::Inner {
                predicate,
                children,
            } => {
                let _ = writeln!(
                    out,
                    "    n{id} [shape=box, label=\"{}\"];",
                    escape(&predicate.display(tree.variables()))
                );
                for (child, label) in children.iter().zip(predicate.edge_labels(tree.variables())) {
                    let _ = writeln!(out, "    n{id} -> n{child} [label=\"{}\"];", escape(&label));
                }
            }
            Node::Leaf { actions, inexact } => {
                let style = if *inexact { ", style=dashed" } else { "" };
                let _ = writeln!(
                    out,
                    "    n{id} [shape=ellipse{style}, label=\"{}\"];",
                    escape(&actions.display(tree.labels()))
                );
            }
        }
    }
    out.push_str("}\n");
    out
}
