use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn ctrltree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctrltree"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn build_stats_cruise() {
    let csv = data("cruise.csv");
    let o = ctrltree(&[
        "build",
        "--controller",
        csv.to_str().unwrap(),
        "--impurity",
        "entropy",
        "--determinize",
        "none",
        "--stats",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o), "nodes=5 inner=2 depth=2\n");
}

#[test]
fn build_safe_early_stop_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let (json, dot, c) = (
        dir.path().join("t.json"),
        dir.path().join("t.dot"),
        dir.path().join("t.c"),
    );
    let o = ctrltree(&[
        "build",
        "--controller",
        data("cruise.csv").to_str().unwrap(),
        "--metadata",
        data("cruise_meta.json").to_str().unwrap(),
        "--determinize",
        "safe-early-stop",
        "--priority",
        "linear=0.5",
        "--out-json",
        json.to_str().unwrap(),
        "--out-dot",
        dot.to_str().unwrap(),
        "--out-c",
        c.to_str().unwrap(),
        "--stats",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o), "nodes=1 inner=0 depth=0\n");
    let tree = ctrltree::export::import_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(tree.stats().total_nodes, 1);
    assert_eq!(
        std::fs::read_to_string(&dot).unwrap(),
        ctrltree::export::export_dot(&tree)
    );
    assert!(std::fs::read_to_string(&c).unwrap().contains("return 1;"));
}

#[test]
fn usage_errors_exit_2() {
    let o = ctrltree(&["build", "--stats"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--controller"));
    let csv = data("cruise.csv");
    let o = ctrltree(&[
        "build",
        "--controller",
        csv.to_str().unwrap(),
        "--impurity",
        "purity",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--impurity"));
    let o = ctrltree(&[
        "build",
        "--controller",
        csv.to_str().unwrap(),
        "--priority",
        "linear",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(ctrltree(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ctrltree(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "#PERMISSIVE\n1,2,a\n3,b\n").unwrap();
    let o = ctrltree(&["build", "--controller", bad.to_str().unwrap(), "--stats"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ArityMismatch"));
    let o = ctrltree(&["build", "--controller", "/nonexistent/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let csv = data("cruise.csv");
    let o = ctrltree(&[
        "build",
        "--controller",
        csv.to_str().unwrap(),
        "--priority",
        "axis=0",
        "--priority",
        "linear=0",
        "--priority",
        "categorical=0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_csv_two_rows() {
    let o = ctrltree(&[
        "bench",
        "--controller",
        data("cruise.csv").to_str().unwrap(),
        "--configs",
        data("two_configs.json").to_str().unwrap(),
        "--repeats",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let nodes: Vec<String> = reader
        .records()
        .map(|r| r.unwrap()[3].to_string())
        .collect();
    assert_eq!(nodes, vec!["5", "1"]);
    let o = ctrltree(&[
        "bench",
        "--controller",
        data("cruise.csv").to_str().unwrap(),
        "--configs",
        data("two_configs.json").to_str().unwrap(),
    ]);
    assert!(stdout(&o).contains("**1**"));
}

#[test]
fn dk_templates_are_used() {
    let o = ctrltree(&[
        "build",
        "--controller",
        data("cruise.csv").to_str().unwrap(),
        "--metadata",
        data("cruise_meta.json").to_str().unwrap(),
        "--dk",
        data("cruise_dk.txt").to_str().unwrap(),
        "--priority",
        "axis=0",
        "--priority",
        "linear=0",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let tree = ctrltree::export::import_json(&stdout(&o)).unwrap();
    assert!(matches!(
        tree.node(tree.root()).unwrap(),
        ctrltree::Node::Inner {
            predicate: ctrltree::Predicate::Algebraic { .. },
            ..
        }
    ));
}

#[test]
fn simulate_loop() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("t.json");
    let o = ctrltree(&[
        "build",
        "--controller",
        data("cruise.csv").to_str().unwrap(),
        "--metadata",
        data("cruise_meta.json").to_str().unwrap(),
        "--out-json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut child = Command::new(env!("CARGO_BIN_EXE_ctrltree"))
        .args([
            "simulate",
            "--tree",
            json.to_str().unwrap(),
            "--transitions",
            data("cruise_transitions.json").to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"2,6,10\nbrake\nacc\nneu 0,0,5\nquit\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("state (2, 6, 10)"), "{text}");
    assert!(text.contains("error[DisallowedAction]"));
    assert!(text.contains("state (4, 6, 9)"));
    assert!(text.contains("state (0, 0, 5)"));
    assert!(text.contains("leaf n"));
}
