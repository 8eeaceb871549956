use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use twnet::fixtures;

struct Case {
    _dir: TempDir,
    graph: PathBuf,
    td: PathBuf,
}

fn case(built: (twnet::WeightedGraph, twnet::tree::TreeDecomposition)) -> Case {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.gr");
    let td = dir.path().join("g.td");
    fs::write(&graph, built.0.to_edge_list()).unwrap();
    fs::write(&td, built.1.to_pace()).unwrap();
    Case { _dir: dir, graph, td }
}

fn path_case() -> Case {
    case(fixtures::path(&[1.0, 2.0, 1.0, 3.0, 1.0, 1.0]).unwrap())
}

fn grid_case() -> Case {
    case(fixtures::grid(4, |u, v| ((u + v) % 3 + 1) as f64).unwrap())
}

fn twnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twnet")).args(args).output().unwrap()
}

fn run(c: &Case, sub: &str, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--graph", c.graph.to_str().unwrap(), "--td", c.td.to_str().unwrap()];
    args.extend_from_slice(extra);
    twnet(&args)
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.json"));
    let s: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let errors: Vec<String> = schema(name).iter_errors(v).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

const SUBCOMMANDS: [(&str, &[&str]); 7] = [
    ("convert", &[]),
    ("net", &["--delta", "2"]),
    ("decompose", &["--delta", "2", "--seed", "7", "--samples", "3"]),
    ("cover", &["--delta", "2"]),
    ("partition-cover", &["--delta", "2"]),
    ("verify", &["--delta", "2", "--trials", "400", "--samples", "5"]),
    ("padding-estimate", &["--delta", "2", "--trials", "400", "--gamma", "0.01", "--gamma", "0.05"]),
];

#[test]
fn every_output_matches_its_schema() {
    for c in [path_case(), grid_case()] {
        for (sub, extra) in SUBCOMMANDS {
            let v = json(&run(&c, sub, extra));
            assert_eq!(v["command"], sub);
            assert_valid(sub, &v);
        }
    }
}

#[test]
fn schemas_reject_malformed_output() {
    let c = path_case();
    let mut v = json(&run(&c, "cover", &["--delta", "2"]));
    v["cover"]["guarantees"]["padding_ratio"] = Value::String("six".into());
    assert!(!schema("cover").is_valid(&v));
    let mut v = json(&run(&c, "verify", &["--delta", "2", "--trials", "50", "--samples", "1"]));
    v["checks"][0]["status"] = Value::String("maybe".into());
    assert!(!schema("verify").is_valid(&v));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let c = grid_case();
    for (sub, extra) in SUBCOMMANDS {
        let a = run(&c, sub, extra);
        let b = run(&c, sub, extra);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{sub}");
    }
}

#[test]
fn seeds_change_decompositions() {
    let c = grid_case();
    let a = json(&run(&c, "decompose", &["--delta", "2", "--seed", "1"]));
    let b = json(&run(&c, "decompose", &["--delta", "2", "--seed", "2"]));
    assert_ne!(a["partitions"][0]["radii"], b["partitions"][0]["radii"]);
    let many = json(&run(&c, "decompose", &["--delta", "2", "--seed", "1", "--samples", "2"]));
    assert_eq!(many["partitions"][0], a["partitions"][0]);
    assert_eq!(many["partitions"][1], b["partitions"][0]);
}

#[test]
fn convert_reports_width_and_isometry() {
    let c = path_case();
    let v = json(&run(&c, "convert", &[]));
    assert_eq!(v["width"], 2);
    assert_eq!(v["width_report"]["td_width"], 1);
    assert_eq!(v["isometry"], "pass");
    assert_eq!(v["td_source"], "file");
}

#[test]
fn decompose_reports_parameters() {
    let c = grid_case();
    let v = json(&run(&c, "decompose", &["--delta", "2", "--alpha", "3"]));
    let p = &v["params"];
    let tau = p["tau"].as_f64().unwrap();
    let close = |a: &Value, b: f64| (a.as_f64().unwrap() - b).abs() < 1e-9;
    assert!(close(&p["padding_parameter"], 32.0 * (2.0 * tau).ln()));
    assert!(close(&p["diameter_bound"], 8.0));
    assert!(close(&p["delta_param"], 1.0 / 16.0));
}

#[test]
fn verify_passes_on_valid_input() {
    let c = grid_case();
    let out = run(&c, "verify", &["--delta", "2", "--trials", "2000", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["summary"]["fail"], 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("net.covering"));
}

#[test]
fn verify_exits_one_on_failed_check() {
    // a single trial cannot certify near-certain padding
    let c = path_case();
    let out = run(&c, "verify", &["--delta", "2", "--trials", "1", "--gamma", "1e-9", "--samples", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert!(v["summary"]["fail"].as_u64().unwrap() >= 1);
}

#[test]
fn out_flag_matches_stdout() {
    let c = path_case();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cover.json");
    let to_stdout = run(&c, "cover", &["--delta", "2"]);
    let to_file = run(&c, "cover", &["--delta", "2", "--out", file.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    assert_eq!(fs::read(&file).unwrap(), to_stdout.stdout);
}

#[test]
fn missing_decomposition_is_computed() {
    let c = path_case();
    let v = json(&twnet(&["convert", "--graph", c.graph.to_str().unwrap()]));
    assert_eq!(v["td_source"], "exact");
    assert_eq!(v["width"], 2);
    let big = case(fixtures::grid(4, |_, _| 1.0).unwrap());
    let v = json(&twnet(&["convert", "--graph", big.graph.to_str().unwrap()]));
    assert_eq!(v["td_source"], "min-degree");
    assert_eq!(v["isometry"], "pass");
}

fn expect_exit_two(out: &Output, needle: &str) {
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(needle), "stderr `{err}` lacks `{needle}`");
}

#[test]
fn parse_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("bad.gr");
    fs::write(&g, "p ge 3 2\ne 1 2 1\ne 2 x 1\n").unwrap();
    expect_exit_two(&twnet(&["net", "--graph", g.to_str().unwrap(), "--delta", "1"]), "bad.gr:3:");

    let c = path_case();
    let td = dir.path().join("bad.td");
    fs::write(&td, "c broken\ns td 1 2 7\nb 1 1 2\n").unwrap();
    let out = twnet(&["convert", "--graph", c.graph.to_str().unwrap(), "--td", td.to_str().unwrap()]);
    expect_exit_two(&out, "bad.td");
}

#[test]
fn invalid_configuration_exits_two() {
    let c = path_case();
    expect_exit_two(&run(&c, "partition-cover", &["--delta", "2", "--alpha", "2"]), "alpha");
    expect_exit_two(&run(&c, "cover", &["--delta", "2", "--alpha", "1"]), "alpha");
    expect_exit_two(&run(&c, "net", &["--delta", "0"]), "delta");
    expect_exit_two(&run(&c, "verify", &["--delta", "2", "--trials", "0"]), "trials");
    expect_exit_two(&run(&c, "padding-estimate", &["--delta", "2", "--trials", "0"]), "trials");
    expect_exit_two(&run(&c, "padding-estimate", &["--delta", "2", "--gamma", "0.5"]), "gamma");
    expect_exit_two(&twnet(&["net", "--graph", "/nonexistent.gr", "--delta", "1"]), "nonexistent");
    assert_eq!(twnet(&["net"]).status.code(), Some(2));
}
