//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{random_controller, random_tree, rng};
use ctrltree::builder::{select_from, ScoredCandidate};
use ctrltree::export::{export_c, export_json, import_json};
use ctrltree::impurity::{node_impurity, split_impurity};
use ctrltree::ingest::{
    parse_controller_csv, parse_metadata, parse_strategy_json, write_controller_csv,
};
use ctrltree::predicates::{axis_aligned_candidates, categorical_grouping};
use ctrltree::{
    build_tree, select_predicate, BuildConfig, Controller, ControllerBuilder, DecisionTree,
    Determinizer, ImpurityMeasure, LeafMode, NodeView, Predicate, VariableMeta,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Pinned tolerances.
const SPLIT_TOL: f64 = 1e-4;
const TWOING_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-12;
const CRUISE_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_BUDGET: Duration = Duration::from_secs(10);

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cruise() -> Controller {
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

fn grid() -> Controller {
    let vars = vec![VariableMeta::numeric("x"), VariableMeta::numeric("y")];
    let mut b = ControllerBuilder::new(vars);
    for (x, base) in [(1.0, "a"), (2.0, "b")] {
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

fn axis_only() -> BuildConfig {
    BuildConfig::default().with_priority("linear", 0.0)
}

/// Exact representation when `exact`, nonempty subset otherwise.
fn check_tree(tree: &DecisionTree, c: &Controller, exact: bool) -> std::result::Result<(), String> {
    for (state, allowed) in c.rows() {
        let got = tree
            .evaluate(state)
            .map_err(|e| format!("evaluate {state:?}: {e}"))?;
        let ok = if exact {
            got == allowed
        } else {
            !got.is_empty() && got.is_subset(allowed)
        };
        ensure(ok, || {
            format!(
                "state {state:?}: tree {} vs controller {}",
                c.format_set(got),
                c.format_set(allowed)
            )
        })?;
    }
    Ok(())
}

fn criterion_1() -> Check {
    let c = cruise();
    let start = Instant::now();
    let tree = build_tree(&c, &axis_only()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let stats = tree.stats();
    ensure(stats.total_nodes == 5, || {
        format!("expected 5 nodes, got {}", stats.total_nodes)
    })?;
    check_tree(&tree, &c, true)?;
    ensure(elapsed < CRUISE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("5 nodes, 4/4 states agree, {elapsed:?}"))
}

fn criterion_2() -> Check {
    let c = cruise();
    let config = axis_only()
        .with_determinizer(Determinizer::SafeEarlyStop)
        .with_leaf_mode(LeafMode::Single);
    let tree = build_tree(&c, &config).map_err(|e| e.to_string())?;
    ensure(tree.stats().total_nodes == 1, || {
        format!("expected 1 node, got {}", tree.stats().total_nodes)
    })?;
    let leaf = tree.evaluate(c.state(0)).map_err(|e| e.to_string())?;
    let text = c.format_set(leaf);
    ensure(text == "{neu}", || format!("leaf is {text}"))?;
    check_tree(&tree, &c, false)?;
    Ok("1 node, leaf {neu}".into())
}

fn criterion_3() -> Check {
    let c = grid();
    let config = axis_only()
        .with_measure(ImpurityMeasure::MultiLabelEntropy)
        .with_determinizer(Determinizer::SafeEarlyStop);
    let tree = build_tree(&c, &config).map_err(|e| e.to_string())?;
    ensure(tree.stats().total_nodes == 3, || {
        format!(
            "MLE+safe: expected 3 nodes, got {}",
            tree.stats().total_nodes
        )
    })?;
    let root = match tree.node(tree.root()).map_err(|e| e.to_string())? {
        ctrltree::Node::Inner { predicate, .. } => predicate.clone(),
        other => return Err(format!("root is not a split: {other:?}")),
    };
    let expected = Predicate::AxisAligned {
        var: 0,
        threshold: 1.5,
    };
    ensure(root.approx_eq(&expected), || format!("root is {root:?}"))?;
    let imp = split_impurity(
        &root,
        &NodeView::root(&c),
        ImpurityMeasure::MultiLabelEntropy,
    )
    .map_err(|e| e.to_string())?;
    ensure(imp.abs() <= UNIT_TOL, || format!("split impurity {imp}"))?;
    check_tree(&tree, &c, false)?;

    let config = axis_only().with_determinizer(Determinizer::PreMaxFreq);
    let maxfreq = build_tree(&c, &config).map_err(|e| e.to_string())?;
    let inner = maxfreq.stats().inner_nodes;
    ensure(inner >= 2, || {
        format!("MaxFreq: expected >= 2 inner nodes, got {inner}")
    })?;
    check_tree(&maxfreq, &c, false)?;
    Ok(format!(
        "MLE+safe 3 nodes on x <= 1.5, MaxFreq {inner} inner nodes"
    ))
}

fn oracle_entropy(counts: &[usize]) -> f64 {
    let mut counts: Vec<usize> = counts.iter().copied().filter(|c| *c > 0).collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let n: usize = counts.iter().sum();
    let mut h = 0.0;
    for c in counts {
        let p = c as f64 / n as f64;
        h -= p * p.log2();
    }
    h
}

/// Minimum entropy of a part over every choice of one option per state,
/// where a choice is a nonempty subset (complete = singletons only).
fn part_minimum(sets: &[u16], complete: bool) -> f64 {
    let mut multisets: BTreeSet<Vec<u16>> = BTreeSet::new();
    multisets.insert(Vec::new());
    for &set in sets {
        let options: Vec<u16> = (1..=set)
            .filter(|sub| sub & !set == 0 && (!complete || sub.count_ones() == 1))
            .collect();
        let mut next = BTreeSet::new();
        for m in &multisets {
            for &o in &options {
                let mut grown = m.clone();
                let at = grown.partition_point(|x| *x < o);
                grown.insert(at, o);
                next.insert(grown);
            }
        }
        multisets = next;
    }
    multisets
        .iter()
        .map(|m| {
            let mut counts: HashMap<u16, usize> = HashMap::new();
            for label in m {
                *counts.entry(*label).or_default() += 1;
            }
            oracle_entropy(&counts.values().copied().collect::<Vec<_>>())
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut r = rng(4);
    let mut candidates = 0;
    let mut cache: HashMap<(Vec<u16>, bool), f64> = HashMap::new();
    for i in 0..50 {
        let c = random_controller(&mut r, 6, 3, 4, false);
        let masks: Vec<u16> = c
            .rows()
            .map(|(_, set)| set.ids().iter().fold(0u16, |m, id| m | (1 << id)))
            .collect();
        let view = NodeView::root(&c);
        for var in 0..c.variables().len() {
            for pred in axis_aligned_candidates(&view, var) {
                candidates += 1;
                let mut parts: Vec<Vec<u16>> = vec![Vec::new(); 2];
                for (row, mask) in masks.iter().enumerate() {
                    let b = pred.eval(c.state(row)).map_err(|e| e.to_string())?;
                    parts[b].push(*mask);
                }
                let mut totals = [0.0; 2];
                for (slot, complete) in [(0, false), (1, true)] {
                    for part in &parts {
                        let mut key = part.clone();
                        key.sort_unstable();
                        let min = *cache
                            .entry((key, complete))
                            .or_insert_with(|| part_minimum(part, complete));
                        totals[slot] += part.len() as f64 / c.len() as f64 * min;
                    }
                }
                ensure(totals[0] == totals[1], || {
                    format!(
                        "controller {i}, {pred:?}: all {} vs complete {}",
                        totals[0], totals[1]
                    )
                })?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < ORACLE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{candidates} candidates equal, {elapsed:?}"))
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{name}: got {got}, want {want} +- {tol}")
    })
}

fn criterion_5() -> Check {
    let c = cruise();
    let root = NodeView::root(&c);
    let err = |e: ctrltree::Error| e.to_string();
    close(
        "entropy",
        node_impurity(&root, ImpurityMeasure::Entropy).map_err(err)?,
        1.5,
        UNIT_TOL,
    )?;
    close(
        "gini",
        node_impurity(&root, ImpurityMeasure::Gini).map_err(err)?,
        0.625,
        UNIT_TOL,
    )?;
    let vo = Predicate::AxisAligned {
        var: 0,
        threshold: 0.0,
    };
    close(
        "v_o <= 0",
        split_impurity(&vo, &root, ImpurityMeasure::Entropy).map_err(err)?,
        0.6887,
        SPLIT_TOL,
    )?;

    let mut b = ControllerBuilder::new(vec![VariableMeta::numeric("x")]);
    b.insert(vec![0.0], ["a"]).unwrap();
    b.insert(vec![1.0], ["b"]).unwrap();
    let two = b.finish(false).unwrap();
    let view = NodeView::root(&two);
    close(
        "MLE",
        node_impurity(&view, ImpurityMeasure::MultiLabelEntropy).map_err(err)?,
        1.0,
        UNIT_TOL,
    )?;
    close(
        "MLGini",
        node_impurity(&view, ImpurityMeasure::MultiLabelGini).map_err(err)?,
        1.5,
        UNIT_TOL,
    )?;

    let f5 = grid();
    let x = Predicate::AxisAligned {
        var: 0,
        threshold: 1.5,
    };
    let twoing = split_impurity(&x, &NodeView::root(&f5), ImpurityMeasure::Twoing).map_err(err)?;
    close("twoing", twoing, 1.0, TWOING_TOL)?;
    Ok("entropy 1.5, gini 0.625, v_o<=0 0.6887, MLE 1, MLGini 1.5, twoing 1".into())
}

fn criterion_6() -> Check {
    let mut r = rng(6);
    let determinizers = [
        Determinizer::None,
        Determinizer::SafeEarlyStop,
        Determinizer::PreMaxFreq,
        Determinizer::PreMinNorm,
        Determinizer::PreRandom(17),
    ];
    let mut trees = 0;
    for i in 0..100 {
        let c = random_controller(&mut r, 200, 5, 6, true);
        let measure = ImpurityMeasure::ALL[i % ImpurityMeasure::ALL.len()];
        for d in determinizers {
            let leaf_mode = if i % 2 == 0 {
                LeafMode::Single
            } else {
                LeafMode::CommonSet
            };
            let config = BuildConfig::default()
                .with_measure(measure)
                .with_determinizer(d)
                .with_leaf_mode(leaf_mode);
            let tree = build_tree(&c, &config)
                .map_err(|e| format!("controller {i}, {measure}/{d}: {e}"))?;
            check_tree(&tree, &c, d == Determinizer::None)
                .map_err(|e| format!("controller {i}, {measure}/{d}: {e}"))?;
            trees += 1;
        }
    }
    Ok(format!("{trees} trees, 0 violations"))
}

fn group_count(c: &Controller, tolerance: f64) -> std::result::Result<usize, String> {
    match categorical_grouping(&NodeView::root(c), 0, ImpurityMeasure::Entropy, tolerance) {
        Ok(Predicate::Categorical { groups, .. }) => Ok(groups.len()),
        Ok(other) => Err(format!("not a grouping: {other:?}")),
        Err(e) => Err(e.to_string()),
    }
}

fn criterion_7() -> Check {
    let shared = colour(["a", "a", "b"]);
    let pred = categorical_grouping(&NodeView::root(&shared), 0, ImpurityMeasure::Entropy, 0.0)
        .map_err(|e| e.to_string())?;
    let shown = pred.display(shared.variables());
    ensure(shown == "colour in {r, g} | {b}", || {
        format!("shared colours: {shown}")
    })?;
    let distinct = colour(["a", "b", "c"]);
    let pred = categorical_grouping(&NodeView::root(&distinct), 0, ImpurityMeasure::Entropy, 0.0)
        .map_err(|e| e.to_string())?;
    let shown = pred.display(distinct.variables());
    ensure(pred.arity() == 3, || format!("distinct colours: {shown}"))?;
    for c in [&shared, &distinct] {
        let n = group_count(c, f64::INFINITY)?;
        ensure(n == 2, || format!("tolerance inf gave {n} groups"))?;
    }

    let tolerances = [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, f64::INFINITY];
    let mut r = rng(7);
    for i in 0..50 {
        let k = r.gen_range(2..=6);
        let var = VariableMeta::categorical("c", (0..k).map(|t| format!("t{t}")));
        let mut b = ControllerBuilder::new(vec![var, VariableMeta::numeric("y")]);
        let actions = r.gen_range(1..=4);
        for code in 0..k {
            for y in 0..r.gen_range(1..=3) {
                let mut set: Vec<String> = (0..actions)
                    .filter(|_| r.gen_bool(0.4))
                    .map(|a| format!("a{a}"))
                    .collect();
                if set.is_empty() {
                    set.push(format!("a{}", r.gen_range(0..actions)));
                }
                b.insert(vec![code as f64, y as f64], set).unwrap();
            }
        }
        let c = b.finish(true).unwrap();
        let counts = tolerances
            .iter()
            .map(|t| group_count(&c, *t))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        ensure(counts.windows(2).all(|w| w[1] <= w[0]), || {
            format!("dataset {i}: counts {counts:?} over {tolerances:?}")
        })?;
        ensure(*counts.last().unwrap() == 2, || {
            format!("dataset {i}: tolerance inf gave {counts:?}")
        })?;
    }
    Ok("colour groupings reproduced, inf -> 2 groups, 50 datasets monotone".into())
}

fn c_compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|_| cc)
}

fn c_agreement(
    cc: &str,
    dir: &Path,
    index: usize,
    tree: &DecisionTree,
    c: &Controller,
) -> std::result::Result<(), String> {
    let source = export_c(tree).map_err(|e| e.to_string())?;
    let src_path = dir.join(format!("tree{index}.c"));
    std::fs::write(&src_path, source).map_err(|e| e.to_string())?;
    let mut main = format!("#include <stdio.h>\n#include \"tree{index}.c\"\n\nstatic const double states[][CLASSIFY_NUM_VARIABLES] = {{\n");
    for (state, _) in c.rows() {
        let coords: Vec<String> = state.iter().map(|v| format!("{v:e}")).collect();
        main.push_str(&format!("    {{{}}},\n", coords.join(", ")));
    }
    main.push_str(&format!(
        "}};\n\nint main(void) {{\n    int out[CLASSIFY_MAX_ACTIONS];\n    for (int i = 0; i < {}; i++) {{\n        int n = classify(states[i], out);\n        printf(\"%d\", n);\n        for (int j = 0; j < n; j++) printf(\" %d\", out[j]);\n        printf(\"\\n\");\n    }}\n    return 0;\n}}\n",
        c.len()
    ));
    let main_path = dir.join(format!("main{index}.c"));
    let exe = dir.join(format!("prog{index}"));
    std::fs::write(&main_path, main).map_err(|e| e.to_string())?;
    let status = Command::new(cc)
        .args(["-std=c99", "-O1", "-o"])
        .arg(&exe)
        .arg(&main_path)
        .arg("-lm")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!(
            "cc failed for controller {index}: {}",
            String::from_utf8_lossy(&status.stderr)
        )
    })?;
    let run = Command::new(&exe).output().map_err(|e| e.to_string())?;
    ensure(run.status.success(), || {
        format!("classifier {index} exited with {}", run.status)
    })?;
    let stdout = String::from_utf8_lossy(&run.stdout);
    for ((state, _), line) in c.rows().zip(stdout.lines()) {
        let want = tree.evaluate(state).map_err(|e| e.to_string())?;
        let mut expected = vec![want.len().to_string()];
        expected.extend(want.ids().iter().map(|id| id.to_string()));
        ensure(
            line.split_whitespace()
                .eq(expected.iter().map(String::as_str)),
            || {
                format!(
                    "controller {index}, state {state:?}: C printed `{line}`, expected `{}`",
                    expected.join(" ")
                )
            },
        )?;
    }
    ensure(stdout.lines().count() == c.len(), || {
        format!("controller {index}: short output")
    })
}

fn criterion_8() -> std::result::Result<Outcome, String> {
    let mut r = rng(8);
    for i in 0..100 {
        let tree = random_tree(&mut r, 4);
        let text = export_json(&tree);
        let back =
            import_json(&text).map_err(|e| format!("tree {i}: import failed: {e}\n{text}"))?;
        ensure(back == tree, || {
            format!("tree {i}: imported tree differs\n{text}")
        })?;
        ensure(export_json(&back) == text, || {
            format!("tree {i}: re-export differs")
        })?;
    }
    for i in 0..50 {
        let c = random_controller(&mut r, 40, 4, 5, true);
        let text = write_controller_csv(&c);
        let back = parse_controller_csv(&text, Some(c.variables()))
            .map_err(|e| format!("controller {i}: {e}"))?;
        ensure(back == c, || {
            format!("controller {i}: parsed controller differs\n{text}")
        })?;
    }
    let Some(cc) = c_compiler() else {
        eprintln!("warning: no C compiler found, skipping the C agreement check");
        return Ok(Outcome::Pass(
            "JSON 100/100, CSV 50/50, C skipped (no cc)".into(),
        ));
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        BuildConfig::default(),
        BuildConfig::default().with_determinizer(Determinizer::SafeEarlyStop),
        BuildConfig::default()
            .with_measure(ImpurityMeasure::MultiLabelGini)
            .with_determinizer(Determinizer::SafeEarlyStop)
            .with_leaf_mode(LeafMode::CommonSet),
        BuildConfig {
            templates: vec!["v0 * c_0 + abs(v0) - c_1 <= 0; c_0 in {0.5, 1, 2}".into()],
            ..BuildConfig::default()
        },
    ];
    for i in 0..20 {
        let mut c = random_controller(&mut r, 60, 4, 5, true);
        if i % 4 == 3 && !c.variables()[0].is_numeric() {
            c = random_controller(&mut r, 60, 1, 5, false);
        }
        let tree = build_tree(&c, &configs[i % configs.len()])
            .map_err(|e| format!("controller {i}: {e}"))?;
        c_agreement(&cc, dir.path(), i, &tree, &c)?;
    }
    Ok(Outcome::Pass("JSON 100/100, CSV 50/50, C 20/20".into()))
}

fn criterion_9() -> Check {
    let f1 = cruise();
    let view = NodeView::root(&f1);
    let a = ScoredCandidate::new(
        Predicate::AxisAligned {
            var: 0,
            threshold: 0.0,
        },
        0.6,
        1.0,
        None,
    );
    let b = ScoredCandidate::new(
        Predicate::AxisAligned {
            var: 1,
            threshold: 4.0,
        },
        0.4,
        0.5,
        None,
    );
    let best = select_from(&[b.clone(), a.clone()], &view).map_err(|e| e.to_string())?;
    ensure(best.predicate == a.predicate, || {
        format!("0.4/0.5 beat 0.6/1: {:?}", best.predicate)
    })?;

    let zero = ScoredCandidate::new(
        Predicate::AxisAligned {
            var: 2,
            threshold: 10.0,
        },
        0.0,
        0.0,
        None,
    );
    let best = select_from(&[zero.clone(), b.clone()], &view).map_err(|e| e.to_string())?;
    ensure(best.predicate == b.predicate, || {
        "priority-0 candidate chosen over a valid one".into()
    })?;
    let invalid = ScoredCandidate::new(
        Predicate::AxisAligned {
            var: 0,
            threshold: 9.0,
        },
        f64::INFINITY,
        1.0,
        None,
    );
    let best = select_from(&[invalid, zero.clone()], &view).map_err(|e| e.to_string())?;
    ensure(best.predicate == zero.predicate, || {
        "fallback to priority 0 not taken".into()
    })?;

    let colours = colour(["a", "b", "c"]);
    let config = BuildConfig::default().with_priority("categorical", 0.0);
    let tree = build_tree(&colours, &config).map_err(|e| e.to_string())?;
    check_tree(&tree, &colours, true)?;

    let mut r = rng(9);
    let mut nodes = 0;
    while nodes < 20 {
        let c = random_controller(&mut r, 30, 3, 4, true);
        let mut rows: Vec<usize> = (0..c.len()).collect();
        rows.shuffle(&mut r);
        rows.truncate(r.gen_range(2..=c.len().max(2)));
        let view = NodeView::new(&c, rows);
        let mut config = BuildConfig::default();
        for domain in ["axis", "linear", "categorical"] {
            let p = if r.gen_bool(0.15) {
                0.0
            } else {
                r.gen_range(0.05..=1.0)
            };
            config = config.with_priority(domain, p);
        }
        let Ok((base, _)) = select_predicate(&view, &config) else {
            continue;
        };
        let k: f64 = r.gen_range(0.05..1.0);
        let mut scaled = config.clone();
        for p in scaled.priorities.values_mut() {
            *p *= k;
        }
        let (pred, _) = select_predicate(&view, &scaled).map_err(|e| e.to_string())?;
        ensure(pred.approx_eq(&base), || {
            format!("node {nodes}: {base:?} became {pred:?} at scale {k}")
        })?;
        nodes += 1;
    }
    Ok("0.6/1 beats 0.4/0.5, priority-0 fallback, 20 rescaled nodes unchanged".into())
}

fn load_external(var: &str) -> Option<std::result::Result<Controller, String>> {
    let path = std::env::var(var).ok()?;
    let meta = std::env::var(format!("{var}_META")).ok();
    Some((|| {
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
        let meta = match meta {
            Some(p) => {
                let m = std::fs::read_to_string(&p).map_err(|e| format!("{p}: {e}"))?;
                Some(parse_metadata(&m).map_err(|e| e.to_string())?)
            }
            None => None,
        };
        if path.ends_with(".json") {
            parse_strategy_json(&text, meta.as_deref())
        } else {
            parse_controller_csv(&text, meta.as_deref())
        }
        .map_err(|e| e.to_string())
    })())
}

fn criterion_10() -> std::result::Result<Outcome, String> {
    let cases = [
        ("CTRLTREE_CARTPOLE", "cartpole", 11),
        ("CTRLTREE_10ROOMS", "10rooms", 7),
    ];
    let mut done = Vec::new();
    for (var, name, bound) in cases {
        let Some(loaded) = load_external(var) else {
            continue;
        };
        let c = loaded?;
        let config = BuildConfig::default()
            .with_measure(ImpurityMeasure::MultiLabelEntropy)
            .with_determinizer(Determinizer::SafeEarlyStop);
        let tree = build_tree(&c, &config).map_err(|e| format!("{name}: {e}"))?;
        check_tree(&tree, &c, false).map_err(|e| format!("{name}: {e}"))?;
        let n = tree.stats().total_nodes;
        ensure(n <= bound, || format!("{name}: {n} nodes, bound {bound}"))?;
        done.push(format!("{name} {n} nodes"));
    }
    if done.is_empty() {
        return Ok(Outcome::Skip(
            "set CTRLTREE_CARTPOLE / CTRLTREE_10ROOMS to run".into(),
        ));
    }
    Ok(Outcome::Pass(done.join(", ")))
}

fn run(f: impl FnOnce() -> std::result::Result<Outcome, String>) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(outcome)) => outcome,
        Ok(Err(msg)) => Outcome::Fail(msg),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        }
    }
}

fn simple(f: fn() -> Check) -> impl FnOnce() -> std::result::Result<Outcome, String> {
    move || f().map(Outcome::Pass)
}

fn main() {
    let outcomes = vec![
        (1, run(simple(criterion_1))),
        (2, run(simple(criterion_2))),
        (3, run(simple(criterion_3))),
        (4, run(simple(criterion_4))),
        (5, run(simple(criterion_5))),
        (6, run(simple(criterion_6))),
        (7, run(simple(criterion_7))),
        (8, run(criterion_8)),
        (9, run(simple(criterion_9))),
        (10, run(criterion_10)),
    ];
    let mut failed = Vec::new();
    for (n, outcome) in &outcomes {
        match outcome {
            Outcome::Pass(msg) => println!("PASS criterion {n}: {msg}"),
            Outcome::Skip(msg) => println!("SKIP criterion {n}: {msg}"),
            Outcome::Fail(msg) => {
                println!("FAIL criterion {n}: {msg}");
                failed.push(*n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all primary criteria passed");
}
