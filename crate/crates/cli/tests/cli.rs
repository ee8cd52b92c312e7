use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pivotbsp::factorgraph::load_pose_graph;
use pivotbsp::oracle::dense_reference;
use pivotbsp::StateOrder;
use pivotbsp_cli::{run_cli, tactic_names, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

const SMALL: &str = "width = 13\nheight = 13\nn_goals = 2\nk = 3\ngoal_spacing = 8\nlc_spacing = 5\n";

const TWO: &str = "VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 1.0 0.1 0.2\n\
                   EDGE_SE2 0 1 1.0 0.0 0.15 100 0 0 100 0 400\n";

fn pivotbsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pivotbsp")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field(stdout: &[u8], key: &str) -> usize {
    let text = String::from_utf8_lossy(stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
}

#[test]
fn run_writes_sessions_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", SMALL);
    let out = dir.path().join("out");
    let o = pivotbsp(&["run", "--config", s(&cfg), "--out", s(&out), "--tactics", "baseline,pivot1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sessions.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), pivotbsp::simworld::CSV_HEADER);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"decisions_agree\": true"), "{summary}");
}

#[test]
fn missing_config_exits_with_config_code() {
    let o = pivotbsp(&["run", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.cfg"));
}

#[test]
fn bad_config_and_unknown_tactic_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "width = wide\n");
    assert_eq!(run_cli(["pivotbsp", "run", "--config", s(&bad)]), EXIT_CONFIG);
    let cfg = write(dir.path(), "s.cfg", SMALL);
    let code = run_cli(["pivotbsp", "compare", "--config", s(&cfg), "--tactics", "baseline,pivot9x"]);
    assert_eq!(code, EXIT_CONFIG);
    assert_eq!(run_cli(["pivotbsp", "frobnicate"]), EXIT_CONFIG);
}

#[test]
fn seed_override_changes_the_log_and_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", SMALL);
    let csv = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let code = run_cli(["pivotbsp", "run", "--config", s(&cfg), "--out", s(&out), "--seed", seed]);
        assert_eq!(code, EXIT_OK);
        fs::read(out.join("sessions.csv")).unwrap()
    };
    let (a, b, c) = (csv("1", "a"), csv("1", "b"), csv("2", "c"));
    assert_eq!(a, b);
    let json = |name: &str| fs::read_to_string(dir.path().join(name).join("summary.json")).unwrap();
    assert_eq!(json("a"), json("b"));
    assert_ne!(json("a"), json("c"));
    assert!(!c.is_empty());
}

#[test]
fn compare_prints_one_row_per_tactic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", SMALL);
    let out = dir.path().join("out");
    let rows = |tactics: &str| {
        let o = pivotbsp(&["compare", "--config", s(&cfg), "--out", s(&out), "--tactics", tactics]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap().lines().filter(|l| !l.trim().is_empty()).count() - 1
    };
    assert_eq!(rows("baseline,pivotmaxstar"), 2);
    assert_eq!(rows(&tactic_names().join(",")), 7);
    let o = pivotbsp(&["compare", "--config", s(&cfg), "--out", s(&out), "--tactics", "baseline"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn graph_reports_the_dense_fill_of_two_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "two.g2o", TWO);
    let o = pivotbsp(&["graph", s(&file)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o.stdout, "nnz_R"), dense_nnz(TWO, false));
    assert_eq!(field(&o.stdout, "variables"), 2);
    assert_eq!(field(&o.stdout, "factors"), 2);
}

/// Structural nonzeros of the dense Cholesky factor of `text`'s graph.
fn dense_nnz(text: &str, reversed: bool) -> usize {
    let g = load_pose_graph(text.as_bytes()).unwrap();
    let mut vars = g.variables().to_vec();
    if reversed {
        vars.reverse();
    }
    let oracle = dense_reference(&g, &StateOrder::new(vars).unwrap()).unwrap();
    oracle.r.iter().filter(|v| v.abs() > 1e-12).count()
}

/// A square lattice of poses with odometry along rows and columns.
fn lattice_g2o(side: u32) -> String {
    let mut text = String::new();
    let id = |x: u32, y: u32| y * side + x;
    for y in 0..side {
        for x in 0..side {
            text += &format!("VERTEX_SE2 {} {x} {y} 0\n", id(x, y));
        }
    }
    for y in 0..side {
        for x in 0..side {
            if x + 1 < side {
                text += &format!("EDGE_SE2 {} {} 1 0 0 100 0 0 100 0 400\n", id(x, y), id(x + 1, y));
            }
            if y + 1 < side {
                text += &format!("EDGE_SE2 {} {} 0 1 0 100 0 0 100 0 400\n", id(x, y), id(x, y + 1));
            }
        }
    }
    text
}

#[test]
fn min_degree_order_never_fills_more_than_identity_on_a_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "lattice.g2o", &lattice_g2o(6));
    let nnz = |order: &str| {
        let o = pivotbsp(&["graph", s(&file), "--order", order]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        field(&o.stdout, "nnz_R")
    };
    assert!(nnz("mindeg") <= nnz("identity"));
}

#[test]
fn order_file_reverses_a_chain() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "two.g2o", TWO);
    let order = write(dir.path(), "order.txt", "1 0\n");
    let o = pivotbsp(&["graph", s(&file), "--order-file", s(&order)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o.stdout, "nnz_R"), dense_nnz(TWO, true));
    let unknown = write(dir.path(), "bad.txt", "0 7\n");
    assert_eq!(run_cli(["pivotbsp", "graph", s(&file), "--order-file", s(&unknown)]), EXIT_CONFIG);
}

#[test]
fn empty_pose_graph_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "empty.g2o", "");
    assert_eq!(pivotbsp(&["graph", s(&file)]).status.code(), Some(EXIT_RUNTIME));
}
