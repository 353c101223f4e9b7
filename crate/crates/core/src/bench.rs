//! Batched tree construction across configurations.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::builder::{build_tree, BuildConfig, LeafMode};
use crate::error::{Error, Result};
use crate::model::{Controller, DecisionTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub case: String,
    pub states: usize,
    pub config: String,
    pub fingerprint: String,
    pub nodes: Option<usize>,
    pub inner: Option<usize>,
    pub leaves: Option<usize>,
    pub depth: Option<usize>,
    pub min_ms: Option<f64>,
    pub median_ms: Option<f64>,
    /// The tree returns exactly the controller's set in every state.
    pub exact: Option<bool>,
    pub error: Option<String>,
}

/// Short human-readable name of a configuration.
pub fn config_label(config: &BuildConfig) -> String {
    let mut label = format!("{}/{}", config.measure, config.determinizer);
    if config.leaf_mode == LeafMode::CommonSet {
        label.push_str(" common-set");
    }
    if config.tolerance != 0.0 {
        let _ = write!(label, " tol={}", config.tolerance);
    }
    for (domain, p) in &config.priorities {
        let _ = write!(label, " {domain}={p}");
    }
    if !config.templates.is_empty() {
        let _ = write!(label, " templates={}", config.templates.len());
    }
    if let Some(d) = config.max_depth {
        let _ = write!(label, " max-depth={d}");
    }
    label
}

/// Parses a JSON array of configuration documents.
pub fn parse_config_batch(text: &str) -> Result<Vec<BuildConfig>> {
    let configs: Vec<BuildConfig> = serde_json::from_str(text)?;
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

pub fn is_exact(tree: &DecisionTree, controller: &Controller) -> bool {
    controller
        .rows()
        .all(|(state, set)| tree.evaluate(state).is_ok_and(|got| got == set))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Builds one tree per repeat and summarizes it. Timing covers
/// determinization, candidate generation and induction.
pub fn run_one(
    case: &str,
    controller: &Controller,
    config: &BuildConfig,
    repeats: usize,
) -> Result<(ExperimentResult, DecisionTree)> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let mut times = Vec::with_capacity(repeats);
    let mut tree = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let built = build_tree(controller, config)?;
        times.push(start.elapsed().as_secs_f64() * 1000.0);
        tree.get_or_insert(built);
    }
    let tree = tree.expect("at least one repeat");
    times.sort_by(f64::total_cmp);
    let stats = tree.stats();
    let result = ExperimentResult {
        case: case.to_string(),
        states: controller.len(),
        config: config_label(config),
        fingerprint: config.fingerprint(),
        nodes: Some(stats.total_nodes),
        inner: Some(stats.inner_nodes),
        leaves: Some(stats.leaves),
        depth: Some(stats.depth),
        min_ms: Some(times[0]),
        median_ms: Some(median(&times)),
        exact: Some(is_exact(&tree, controller)),
        error: None,
    };
    Ok((result, tree))
}

/// Runs every configuration `repeats` times, in order. A failing
/// configuration yields a row with `error` set instead of aborting.
pub fn run_experiments(
    case: &str,
    controller: &Controller,
    configs: &[BuildConfig],
    repeats: usize,
) -> Result<Vec<ExperimentResult>> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    Ok(configs
        .iter()
        .map(|config| match run_one(case, controller, config, repeats) {
            Ok((result, _)) => result,
            Err(err) => ExperimentResult {
                case: case.to_string(),
                states: controller.len(),
                config: config_label(config),
                fingerprint: config.fingerprint(),
                nodes: None,
                inner: None,
                leaves: None,
                depth: None,
                min_ms: None,
                median_ms: None,
                exact: None,
                error: Some(format!("{}: {err}", err.kind())),
            },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableStyle::Csv),
            "markdown" | "md" => Ok(TableStyle::Markdown),
            _ => Err(Error::InvalidConfig(format!("unknown table format `{s}`"))),
        }
    }
}

pub const TABLE_COLUMNS: [&str; 8] = [
    "case", "states", "config", "nodes", "inner", "depth", "time_ms", "error",
];

fn cells(r: &ExperimentResult) -> [String; 8] {
    let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    [
        r.case.clone(),
        r.states.to_string(),
        r.config.clone(),
        opt(r.nodes),
        opt(r.inner),
        opt(r.depth),
        r.median_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Renders results as CSV or a markdown table. In markdown the smallest
/// node count of each case is bold, every tied row included.
pub fn format_results(results: &[ExperimentResult], style: TableStyle) -> String {
    match style {
        TableStyle::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(TABLE_COLUMNS).expect("in-memory write");
            for r in results {
                w.write_record(cells(r)).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
        }
        TableStyle::Markdown => {
            let mut out = format!("| {} |\n", TABLE_COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(TABLE_COLUMNS.len()));
            for r in results {
                let best = results
                    .iter()
                    .filter(|o| o.case == r.case)
                    .filter_map(|o| o.nodes)
                    .min();
                let mut row = cells(r).map(|c| c.replace('|', "\\|"));
                if r.nodes.is_some() && r.nodes == best {
                    row[3] = format!("**{}**", row[3]);
                }
                let _ = writeln!(out, "| {} |", row.join(" | "));
            }
            out
        }
    }
}
