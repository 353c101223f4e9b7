//! Command-line driver: `build`, `bench`, `serve` and `simulate`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::bench::{format_results, parse_config_batch, run_experiments, TableStyle};
use crate::builder::{build_tree, parse_tolerance, BuildConfig, LeafMode};
use crate::error::{Error, Result};
use crate::export::{export_c, export_dot, export_json, import_json};
use crate::impurity::{Determinizer, ImpurityMeasure};
use crate::ingest::{
    determinization_warning, metadata_objective, parse_controller_csv, parse_domain_knowledge,
    parse_metadata, parse_strategy_json,
};
use crate::model::{format_state, Controller, DecisionTree};
use crate::simulate::{parse_state, DecisionPath, Simulation, Transitions};

#[derive(Parser)]
#[command(
    name = "ctrltree",
    version,
    about = "Represent controllers as decision trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a tree from a controller and export it.
    Build(BuildArgs),
    /// Build trees under several configurations and tabulate their sizes.
    Bench(BenchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Step through a run of a tree-controlled system on stdin.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Controller CSV, or a strategy JSON document when the name ends in `.json`.
    #[arg(long)]
    controller: PathBuf,
    /// Variable metadata JSON.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// Domain-knowledge predicate templates.
    #[arg(long)]
    dk: Option<PathBuf>,
}

fn parse_priority(s: &str) -> std::result::Result<(String, f64), String> {
    let (domain, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected domain=value, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((domain.trim().to_string(), value))
}

fn parse_leaf_mode(s: &str) -> std::result::Result<LeafMode, String> {
    match s {
        "single" => Ok(LeafMode::Single),
        "common-set" => Ok(LeafMode::CommonSet),
        _ => Err(format!("expected `single` or `common-set`, got `{s}`")),
    }
}

fn parse_measure(s: &str) -> std::result::Result<ImpurityMeasure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_determinizer(s: &str) -> std::result::Result<Determinizer, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_tolerance_arg(s: &str) -> std::result::Result<f64, String> {
    parse_tolerance(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Base configuration file; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_measure)]
    impurity: Option<ImpurityMeasure>,
    /// none, safe-early-stop, pre-maxfreq, pre-minnorm or pre-random:<seed>.
    #[arg(long, value_parser = parse_determinizer)]
    determinize: Option<Determinizer>,
    /// Domain priority, e.g. `linear=0.5`; repeatable.
    #[arg(long, value_parser = parse_priority)]
    priority: Vec<(String, f64)>,
    /// Grouping tolerance; a number or `inf`.
    #[arg(long, value_parser = parse_tolerance_arg)]
    tolerance: Option<f64>,
    #[arg(long, value_parser = parse_leaf_mode)]
    leaf_mode: Option<LeafMode>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_dot: Option<PathBuf>,
    #[arg(long)]
    out_c: Option<PathBuf>,
    /// Print `nodes=N inner=N depth=N`.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// JSON array of configuration documents.
    #[arg(long)]
    configs: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    repeats: u32,
    #[arg(long, default_value = "markdown", value_parser = ["csv", "markdown"])]
    format: String,
    /// Case name in the table; defaults to the controller file stem.
    #[arg(long)]
    case: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "CTRLTREE_DATA_DIR", default_value = "ctrltree-data")]
    data_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Tree in the JSON export format.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    transitions: Option<PathBuf>,
    /// Initial state, comma-separated; read from the first input line if absent.
    #[arg(long)]
    state: Option<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

struct Loaded {
    controller: Controller,
    objective: Option<String>,
    templates: Vec<String>,
}

fn load_input(input: &InputArgs) -> Result<Loaded> {
    let (meta, objective) = match &input.metadata {
        Some(path) => {
            let text = read(path)?;
            (Some(parse_metadata(&text)?), metadata_objective(&text)?)
        }
        None => (None, None),
    };
    let text = read(&input.controller)?;
    let is_json = input
        .controller
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let controller = if is_json {
        parse_strategy_json(&text, meta.as_deref())?
    } else {
        parse_controller_csv(&text, meta.as_deref())?
    };
    let mut templates = Vec::new();
    if let Some(path) = &input.dk {
        let text = read(path)?;
        parse_domain_knowledge(&text)?;
        templates = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
    }
    Ok(Loaded {
        controller,
        objective,
        templates,
    })
}

fn with_templates(mut config: BuildConfig, templates: &[String]) -> BuildConfig {
    if !templates.is_empty() {
        let mut all = templates.to_vec();
        all.append(&mut config.templates);
        config.templates = all;
    }
    config
}

fn build_config(args: &BuildArgs) -> Result<BuildConfig> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?)?,
        None => BuildConfig::default(),
    };
    if let Some(m) = args.impurity {
        config.measure = m;
    }
    if let Some(d) = args.determinize {
        config.determinizer = d;
    }
    for (domain, value) in &args.priority {
        config.priorities.insert(domain.clone(), *value);
    }
    if let Some(t) = args.tolerance {
        config.tolerance = t;
    }
    if let Some(l) = args.leaf_mode {
        config.leaf_mode = l;
    }
    if args.max_depth.is_some() {
        config.max_depth = args.max_depth;
    }
    Ok(config)
}

fn run_build(args: BuildArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = load_input(&args.input)?;
    let config = with_templates(build_config(&args)?, &loaded.templates);
    config.validate()?;
    if let Some(w) = determinization_warning(loaded.objective.as_deref(), config.determinizer) {
        eprintln!("warning: {w}");
    }
    let tree = build_tree(&loaded.controller, &config)?;
    if let Some(p) = &args.out_json {
        write(p, &export_json(&tree))?;
    }
    if let Some(p) = &args.out_dot {
        write(p, &export_dot(&tree))?;
    }
    if let Some(p) = &args.out_c {
        write(p, &export_c(&tree)?)?;
    }
    if args.stats {
        let s = tree.stats();
        writeln!(
            out,
            "nodes={} inner={} depth={}",
            s.total_nodes, s.inner_nodes, s.depth
        )?;
    }
    if !args.stats && args.out_json.is_none() && args.out_dot.is_none() && args.out_c.is_none() {
        writeln!(out, "{}", export_json(&tree))?;
    }
    Ok(())
}

fn run_bench(args: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = load_input(&args.input)?;
    let configs: Vec<BuildConfig> = parse_config_batch(&read(&args.configs)?)?
        .into_iter()
        .map(|c| with_templates(c, &loaded.templates))
        .collect();
    let case = args.case.unwrap_or_else(|| {
        args.input
            .controller
            .file_stem()
            .map_or_else(|| "controller".into(), |s| s.to_string_lossy().into_owned())
    });
    let rows = run_experiments(&case, &loaded.controller, &configs, args.repeats as usize)?;
    let style: TableStyle = args.format.parse()?;
    write!(out, "{}", format_results(&rows, style))?;
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("serving /api/v1 on 127.0.0.1:{}", args.port);
    runtime.block_on(crate::service::serve(args.port, &args.data_dir))
}

fn state_values(text: &str) -> Vec<Value> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .and_then(|v| serde_json::Number::from_f64(v).map(Value::Number))
                .unwrap_or_else(|| Value::String(t.to_string()))
        })
        .collect()
}

fn print_path(
    out: &mut dyn Write,
    tree: &DecisionTree,
    state: &[f64],
    path: &DecisionPath,
) -> Result<()> {
    writeln!(out, "state {}", format_state(tree.variables(), state))?;
    for step in &path.steps {
        writeln!(out, "  n{} {} -> {}", step.node, step.predicate, step.label)?;
    }
    writeln!(
        out,
        "  leaf n{}: {{{}}}",
        path.leaf,
        path.actions.join(", ")
    )?;
    Ok(())
}

fn run_simulate(args: SimulateArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    let tree = import_json(&read(&args.tree)?)?;
    let transitions = args
        .transitions
        .as_deref()
        .map(|p| read(p).and_then(|t| Transitions::parse(&t, tree.variables())))
        .transpose()?;
    let mut lines = input.lines();
    let first = match args.state {
        Some(s) => s,
        None => match lines.next() {
            Some(line) => line?,
            None => return Ok(()),
        },
    };
    let initial = parse_state(&state_values(&first), tree.variables())?;
    let mut sim = Simulation::new(tree, initial, transitions)?;
    print_path(out, sim.tree(), sim.current(), &sim.current_path()?)?;
    writeln!(out, "enter: <action> [next state], or quit")?;
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "quit" || line == "exit" {
            break;
        }
        let (action, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let step = (|| {
            let next = if rest.trim().is_empty() {
                None
            } else {
                Some(parse_state(&state_values(rest), sim.tree().variables())?)
            };
            sim.step(action, next)
        })();
        match step {
            Ok(path) => print_path(out, sim.tree(), sim.current(), &path)?,
            Err(err) => writeln!(out, "error[{}]: {err}", err.kind())?,
        }
    }
    Ok(())
}

/// Runs the CLI on `argv` and returns the process exit code: 0 on
/// success, 1 on a domain error, 2 on a usage error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Build(args) => run_build(args, &mut out),
        Command::Bench(args) => run_bench(args, &mut out),
        Command::Serve(args) => run_serve(args),
        Command::Simulate(args) => {
            let stdin = std::io::stdin();
            run_simulate(args, &mut stdin.lock(), &mut out)
        }
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.kind());
            1
        }
    }
}
