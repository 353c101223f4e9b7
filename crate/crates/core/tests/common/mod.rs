//! Random controllers and trees shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use ctrltree::ingest::parse_comparison;
use ctrltree::{
    ActionSet, Controller, ControllerBuilder, DecisionTree, Node, Predicate, VariableMeta,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

pub fn random_variables(
    rng: &mut ChaCha8Rng,
    max_vars: usize,
    categorical: bool,
) -> Vec<VariableMeta> {
    let n = rng.gen_range(1..=max_vars);
    (0..n)
        .map(|i| {
            if categorical && rng.gen_bool(0.3) {
                let k = rng.gen_range(2..=4);
                VariableMeta::categorical(format!("v{i}"), (0..k).map(|t| format!("t{t}")))
            } else {
                VariableMeta::numeric(format!("v{i}"))
            }
        })
        .collect()
}

fn random_value(rng: &mut ChaCha8Rng, var: &VariableMeta, scale: f64) -> f64 {
    if var.is_categorical() {
        rng.gen_range(0..var.dictionary.len()) as f64
    } else {
        rng.gen_range(-4i32..=4) as f64 * scale
    }
}

/// A controller with up to `max_states` distinct states over small grids.
/// Every state gets a nonempty random subset of `a0 .. a{k-1}`.
pub fn random_controller(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    max_vars: usize,
    max_actions: usize,
    categorical: bool,
) -> Controller {
    let vars = random_variables(rng, max_vars, categorical);
    let scales: Vec<f64> = vars
        .iter()
        .map(|_| *[1.0, 0.5, 0.1, 2.5].choose(rng).unwrap())
        .collect();
    let k = rng.gen_range(1..=max_actions);
    let names = labels(k);
    let target = rng.gen_range(1..=max_states);
    let mut seen = HashSet::new();
    let mut b = ControllerBuilder::new(vars.clone());
    for _ in 0..target * 20 {
        if seen.len() == target {
            break;
        }
        let state: Vec<f64> = vars
            .iter()
            .zip(&scales)
            .map(|(v, s)| random_value(rng, v, *s))
            .collect();
        let key: Vec<u64> = state.iter().map(|v| v.to_bits()).collect();
        if !seen.insert(key) {
            continue;
        }
        let mut chosen: Vec<&str> = names
            .iter()
            .filter(|_| rng.gen_bool(0.4))
            .map(String::as_str)
            .collect();
        if chosen.is_empty() {
            chosen.push(names.choose(rng).unwrap());
        }
        b.insert(state, chosen).unwrap();
    }
    b.finish(true).unwrap()
}

fn random_predicate(rng: &mut ChaCha8Rng, vars: &[VariableMeta]) -> Predicate {
    let numeric: Vec<usize> = (0..vars.len()).filter(|i| vars[*i].is_numeric()).collect();
    let categorical: Vec<usize> = (0..vars.len())
        .filter(|i| vars[*i].is_categorical())
        .collect();
    loop {
        match rng.gen_range(0..4) {
            0 if !numeric.is_empty() => {
                return Predicate::AxisAligned {
                    var: *numeric.choose(rng).unwrap(),
                    threshold: rng.gen_range(-10.0..10.0),
                }
            }
            1 if !numeric.is_empty() => {
                let mut coefficients: Vec<f64> = vars
                    .iter()
                    .map(|v| {
                        if v.is_numeric() && rng.gen_bool(0.6) {
                            rng.gen_range(-3.0..3.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if coefficients.iter().all(|c| *c == 0.0) {
                    coefficients[*numeric.choose(rng).unwrap()] = 1.0;
                }
                return Predicate::Linear {
                    coefficients,
                    threshold: rng.gen_range(-10.0..10.0),
                };
            }
            2 if !categorical.is_empty() => {
                let var = *categorical.choose(rng).unwrap();
                let mut codes: Vec<usize> = (0..vars[var].dictionary.len()).collect();
                codes.shuffle(rng);
                let arity = rng.gen_range(2..=codes.len());
                let mut groups = vec![Vec::new(); arity];
                for (i, code) in codes.into_iter().enumerate() {
                    let g = if i < arity {
                        i
                    } else {
                        rng.gen_range(0..arity)
                    };
                    groups[g].push(code);
                }
                for g in &mut groups {
                    g.sort_unstable();
                }
                return Predicate::Categorical { var, groups };
            }
            3 if !numeric.is_empty() => {
                let x = &vars[*numeric.choose(rng).unwrap()].name;
                let y = &vars[*numeric.choose(rng).unwrap()].name;
                let a: f64 = rng.gen_range(-5.0..5.0);
                let b: f64 = rng.gen_range(0.1..5.0);
                let text = match rng.gen_range(0..5) {
                    0 => format!("{x} * {a} + {y} <= {b}"),
                    1 => format!("sqrt({x} * {x} + {b}) > {y} - {a}"),
                    2 => format!("exp({x}) - log({y} * {y} + 1) >= {a}"),
                    3 => format!("min({x}, {y}) / {b} < abs({a})"),
                    _ => format!("({x} - {y})^2 = {b}"),
                };
                let (l, c, r) = parse_comparison(&text).unwrap();
                return Predicate::Algebraic {
                    lhs: l.bind(vars, &|_| None).unwrap(),
                    comparator: c,
                    rhs: r.bind(vars, &|_| None).unwrap(),
                    provenance: String::new(),
                };
            }
            _ => {}
        }
    }
}

fn random_leaf(rng: &mut ChaCha8Rng, num_actions: usize) -> Node {
    let ids: Vec<u32> = (0..num_actions as u32)
        .filter(|_| rng.gen_bool(0.4))
        .collect();
    let actions = ActionSet::new(ids)
        .unwrap_or_else(|| ActionSet::singleton(rng.gen_range(0..num_actions) as u32));
    let inexact = rng.gen_bool(0.2);
    Node::Leaf { actions, inexact }
}

fn grow(
    rng: &mut ChaCha8Rng,
    vars: &[VariableMeta],
    num_actions: usize,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    if depth == 0 || rng.gen_bool(0.35) {
        nodes.push(random_leaf(rng, num_actions));
        return id;
    }
    let predicate = random_predicate(rng, vars);
    nodes.push(Node::Leaf {
        actions: ActionSet::singleton(0),
        inexact: false,
    });
    let children = (0..predicate.arity())
        .map(|_| grow(rng, vars, num_actions, depth - 1, nodes))
        .collect();
    nodes[id] = Node::Inner {
        predicate,
        children,
    };
    id
}

/// A structurally valid tree with random predicates of every kind.
pub fn random_tree(rng: &mut ChaCha8Rng, max_depth: usize) -> DecisionTree {
    let vars = random_variables(rng, 4, true);
    let k = rng.gen_range(1..=5);
    let mut nodes = Vec::new();
    let root = grow(rng, &vars, k, max_depth, &mut nodes);
    DecisionTree::new(vars, labels(k), nodes, root).unwrap()
}
