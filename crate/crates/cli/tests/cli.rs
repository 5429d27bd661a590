use std::process::{Command, Output};

use blaschke_cli::input::load;
use blaschke_cli::{run_analysis, Options, Status};
use blaschke_core::classifier::WITNESSES;
use blaschke_core::ZnPartition;
use serde_json::Value;

fn blaschke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blaschke"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn every_witness_realizes_its_partition() {
    for w in WITNESSES {
        let source = load(Some(w.expression), None, None, 0).unwrap();
        let report = run_analysis(&source, &Options::default()).unwrap();
        assert_eq!(
            report.partition,
            ZnPartition::parse(w.partition).unwrap(),
            "{}",
            w.expression
        );
        assert_eq!(
            report.status,
            Status::Pass,
            "{}: {:?}",
            w.expression,
            report.failures
        );
    }
}

#[test]
fn analyze_z8() {
    let out = blaschke(&["analyze", "--expr", "z^8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["q"], 8);
    assert_eq!(v["partition_text"], "{{0},{1},{2},{3},{4},{5},{6},{7}}");
    assert_eq!(v["status"], "PASS");
    // complex numbers are [re, im] pairs
    assert_eq!(v["factor"], serde_json::json!([1.0, 0.0]));
    assert!(v["eigenvalue_table"][1][1]["coeffs"].is_array());
    assert!(v["eigenvalue_table"][1][1]["value"].is_array());
}

#[test]
fn analyze_random_8_is_irreducible() {
    let out = blaschke(&["analyze", "--random", "8", "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["q"], 2);
    assert_eq!(v["partition_text"], "{{0},{1,2,3,4,5,6,7}}");
    assert_eq!(v["reducible"], false);
}

#[test]
fn json_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = blaschke(&[
        "analyze",
        "--expr",
        "mobius(0.5)^2 @ z^2",
        "--json",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("{{0},{1,3},{2}}"), "{summary}");
    assert!(summary.ends_with("PASS\n"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["q"], 3);
    assert_eq!(v["factorizations"][0]["passed"], true);

    let quiet = blaschke(&[
        "-q",
        "analyze",
        "--expr",
        "z^3",
        "--json",
        path.to_str().unwrap(),
    ]);
    assert_eq!(quiet.status.code(), Some(0));
    assert!(quiet.stdout.is_empty());
}

#[test]
fn zeros_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.json");
    std::fs::write(
        &path,
        r#"{"zeros": [[0, 0], [0, 0], [0, 0]], "factor": [0, 1]}"#,
    )
    .unwrap();
    let out = blaschke(&["analyze", "--zeros", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["q"], 3);

    std::fs::write(&path, "[[0.3, 0.1], [-0.2, 0.4]]").unwrap();
    let out = blaschke(&["analyze", "--zeros", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["q"], 2);
}

#[test]
fn verify_z6_residuals() {
    let out = blaschke(&["verify", "--expr", "z^6", "--samples", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for key in [
        "commutativity",
        "composition",
        "eigenrelation",
        "eigenvalue",
    ] {
        let r = v["residuals"][key].as_f64().unwrap();
        assert!(r < 1e-10, "{key} = {r}");
    }
}

#[test]
fn verify_squared_moebius_of_z2() {
    let out = blaschke(&["verify", "--expr", "mobius(0.5)^2 @ z^2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["status"], "PASS");
}

#[test]
fn injected_fault_fails() {
    for expr in ["z^6", "mobius(0.5)^2 @ z^2", "z^2"] {
        let out = blaschke(&["verify", "--expr", expr, "--inject-fault"]);
        assert_eq!(out.status.code(), Some(2), "{expr}");
        let v = json_of(&out);
        assert_eq!(v["status"], "FAILED");
        assert!(v["residuals"]["composition"].as_f64().unwrap() > 1e-3);
    }
}

#[test]
fn classify_counts() {
    for (n, entries) in [(2, 1), (3, 2), (4, 3)] {
        let out = blaschke(&["classify", &n.to_string()]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json_of(&out)["entries"].as_array().unwrap().len(), entries);
    }
}

#[test]
fn usage_errors_exit_with_1() {
    for args in [
        vec!["analyze"],
        vec!["analyze", "--expr", "z^"],
        vec!["analyze", "--expr", "mobius(1.5)"],
        vec!["analyze", "--expr", "z", "--random", "3"],
        vec!["classify", "0"],
        vec!["classify", "40"],
        vec!["frobnicate"],
        vec!["analyze", "--zeros", "/nonexistent/zeros.json"],
    ] {
        let out = blaschke(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    let out = blaschke(&["analyze", "--expr", "mobius(0.3+0.8i)*z^"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("SYNTAX_ERROR") && err.contains("at 19"),
        "{err}"
    );
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(blaschke(&["--help"]).status.code(), Some(0));
}

fn count_class(svg: &str, class: &str) -> usize {
    svg.matches(&format!("class=\"{class}\"")).count()
}

#[test]
fn plot_z4() {
    let out = blaschke(&["plot", "--expr", "z^4"]);
    assert_eq!(out.status.code(), Some(0));
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(count_class(&svg, "unit-circle"), 1);
    assert_eq!(count_class(&svg, "branch-point"), 1);
    assert_eq!(count_class(&svg, "loop"), 1);
    assert_eq!(count_class(&svg, "working-circle"), 1);
}

#[test]
fn plot_is_deterministic_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    let expr = "mobius(0.5)^2 @ z^4";
    for p in [&a, &b] {
        let out = blaschke(&["plot", "--expr", expr, "--svg", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let svg = std::fs::read_to_string(&a).unwrap();
    assert_eq!(svg, std::fs::read_to_string(&b).unwrap());
    let markers = count_class(&svg, "branch-point");
    assert!(markers >= 1 && markers <= 14, "{markers}");
    assert_eq!(count_class(&svg, "loop"), markers);
}

#[test]
fn plot_order_one_is_just_the_disk() {
    let out = blaschke(&["plot", "--expr", "mobius(0.2)"]);
    assert_eq!(out.status.code(), Some(0));
    let svg = String::from_utf8(out.stdout).unwrap();
    assert_eq!(count_class(&svg, "unit-circle"), 1);
    assert_eq!(count_class(&svg, "branch-point"), 0);
    assert_eq!(count_class(&svg, "loop"), 0);
    assert_eq!(count_class(&svg, "cut-gamma"), 0);
}
