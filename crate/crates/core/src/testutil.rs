//! Small fixtures shared by unit tests.

use crate::model::{ActionSet, Controller, ControllerBuilder, DecisionTree, Node, VariableMeta};
use crate::predicates::Predicate;

/// Cruise-control lookup table: (v_o, v_f, d) -> allowed actions.
pub fn cruise() -> Controller {
    let vars = ["v_o", "v_f", "d"]
        .into_iter()
        .map(VariableMeta::numeric)
        .collect();
    let mut b = ControllerBuilder::new(vars);
    b.insert(vec![0.0, 0.0, 5.0], ["neu"]).unwrap();
    b.insert(vec![2.0, 6.0, 10.0], ["dec", "neu", "acc"])
        .unwrap();
    b.insert(vec![2.0, 6.0, 15.0], ["dec", "neu", "acc"])
        .unwrap();
    b.insert(vec![4.0, 4.0, 15.0], ["dec", "neu"]).unwrap();
    b.finish(true).unwrap()
}

/// Hand-written tree for [`cruise`]: `v_o <= 0` at the root, then `v_f <= 4`.
pub fn cruise_tree(c: &Controller) -> DecisionTree {
    let set =
        |labels: &[&str]| ActionSet::new(labels.iter().map(|l| c.label_id(l).unwrap())).unwrap();
    let nodes = vec![
        Node::Inner {
            predicate: Predicate::AxisAligned {
                var: 0,
                threshold: 0.0,
            },
            children: vec![1, 4],
        },
        Node::Inner {
            predicate: Predicate::AxisAligned {
                var: 1,
                threshold: 4.0,
            },
            children: vec![2, 3],
        },
        Node::leaf(set(&["acc", "dec", "neu"])),
        Node::leaf(set(&["dec", "neu"])),
        Node::leaf(set(&["neu"])),
    ];
    DecisionTree::new(c.variables().to_vec(), c.labels().to_vec(), nodes, 0).unwrap()
}

/// Two-variable grid where the left column allows `a`, the right `b`, and
/// the upper rows additionally `c`.
pub fn grid() -> Controller {
    let vars = vec![VariableMeta::numeric("x"), VariableMeta::numeric("y")];
    let mut b = ControllerBuilder::new(vars);
    for x in [1.0, 2.0] {
        let base = if x == 1.0 { "a" } else { "b" };
        b.insert(vec![x, 1.0], [base]).unwrap();
        b.insert(vec![x, 2.0], [base, "c"]).unwrap();
        b.insert(vec![x, 3.0], [base, "c"]).unwrap();
    }
    b.finish(true).unwrap()
}

fn colour(actions: [&str; 3]) -> Controller {
    let mut b = ControllerBuilder::new(vec![VariableMeta::categorical("colour", ["r", "g", "b"])]);
    for (code, action) in actions.into_iter().enumerate() {
        b.insert(vec![code as f64], [action]).unwrap();
    }
    b.finish(false).unwrap()
}

/// r -> a, g -> a, b -> b.
pub fn colour_shared() -> Controller {
    colour(["a", "a", "b"])
}

/// r -> a, g -> b, b -> c.
pub fn colour_distinct() -> Controller {
    colour(["a", "b", "c"])
}
