use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn crpoint(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_crpoint"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

const IDENTITY_2: &str = r#"{"n":2,"A":[[[1,0],[0,0]],[[0,0],[1,0]]],"B":[[[0,0],[0,0]],[[0,0],[0,0]]]}"#;
const HYPERBOLIC_1: &str = r#"{"n":1,"A":[[[0,0]]],"B":[[[1,0]]]}"#;

#[test]
fn classify_identity_is_elliptic() {
    let out = crpoint(&["classify"], IDENTITY_2);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "{\"class\":\"elliptic\",\"det\":1.0}\n");
}

#[test]
fn classify_tolerance_flag_widens_band() {
    let pair = r#"{"n":1,"A":[[[1,0]]],"B":[[[0.999,0]]]}"#;
    assert_eq!(parse(&crpoint(&["classify"], pair))["class"], "elliptic");
    assert_eq!(parse(&crpoint(&["classify", "--tol-abs", "0.01"], pair))["class"], "degenerate");
}

#[test]
fn homotopy_to_hyperbolic_normal_form() {
    let out = crpoint(&["homotopy", "--target", "normal-form", "--samples", "201"], HYPERBOLIC_1);
    assert_eq!(out.status.code(), Some(0));
    let v = parse(&out);
    assert_eq!(v["certificate"]["pass"], true);
    assert_eq!(v["certificate"]["sign"], -1);
    assert!(v["path"]["segments"].is_array());
}

#[test]
fn homotopy_output_certifies_again() {
    let dir = tempfile::tempdir().unwrap();
    let pair = r#"{"n":2,"A":[[[0.3,0.1],[0.2,0]],[[0,0.4],[-0.5,0.2]]],"B":[[[1,0],[0.2,0.1]],[[0.2,0.1],[0.1,-0.3]]]}"#;
    let out = crpoint(&["homotopy", "--samples", "201", "--seed", "4"], pair);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let path = parse(&out)["path"].clone();
    let file = dir.path().join("path.json");
    std::fs::write(&file, path.to_string()).unwrap();
    let cert = crpoint(&["certify", "--input", file.to_str().unwrap(), "--samples", "401"], "");
    assert_eq!(cert.status.code(), Some(0));
    assert_eq!(parse(&cert)["pass"], true);
}

fn crossing_path() -> String {
    let from = r#"{"n":1,"A":[[[1,0]]],"B":[[[0,0]]]}"#;
    let to = r#"{"n":1,"A":[[[0,0]]],"B":[[[1,0]]]}"#;
    format!(
        r#"{{"segments":[{{"kind":"Linear","params":{{"from":{from},"to":{to}}},"reversed":false,"start":{from},"end":{to}}}]}}"#
    )
}

#[test]
fn certify_reports_failure_across_degeneracy() {
    let out = crpoint(&["certify"], &crossing_path());
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert_eq!(parse(&out)["pass"], false);
}

#[test]
fn malformed_json_exits_with_error_object() {
    let out = crpoint(&["classify"], "{ not json");
    assert_eq!(out.status.code(), Some(2));
    let v = parse(&out);
    assert_eq!(v["error"]["kind"], "invalid_input");
    assert_eq!(v["error"]["code"], 2);
}

#[test]
fn asymmetric_dimension_is_invalid_input() {
    let out = crpoint(&["classify"], r#"{"n":2,"A":[[[1,0]]],"B":[[[0,0]]]}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_pair_has_no_normal_form_path() {
    let out = crpoint(&["homotopy"], r#"{"n":1,"A":[[[1,0]]],"B":[[[1,0]]]}"#);
    assert_eq!(out.status.code(), Some(2));
    assert!(parse(&out)["error"]["message"].as_str().unwrap().contains("nondegenerate"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["corpus", "--count", "12", "--seed", "99"];
    let a = stdout(&crpoint(&args, ""));
    let b = stdout(&crpoint(&args, ""));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 12);
    assert_eq!(v[0]["seed"], 99);
}

#[test]
fn corpus_pairs_parse_back_and_reclassify() {
    let v = parse(&crpoint(&["corpus", "--count", "8", "--n", "3"], ""));
    for entry in v.as_array().unwrap() {
        let pair = entry["pair"].to_string();
        let again = parse(&crpoint(&["classify"], &pair));
        assert_eq!(again, entry["classification"]);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# corpus settings\nseed = 5\nn = 2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = parse(&crpoint(&["corpus", "--count", "1", "--config", cfg], ""));
    assert_eq!(from_file[0]["seed"], 5);
    assert_eq!(from_file[0]["pair"]["n"], 2);
    let flagged = parse(&crpoint(&["corpus", "--count", "1", "--config", cfg, "--seed", "6"], ""));
    assert_eq!(flagged[0]["seed"], 6);
}

#[test]
fn small_sample_counts_are_rejected() {
    let out = crpoint(&["certify", "--samples", "50"], &crossing_path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("class.json");
    let out = crpoint(&["classify", "--output", file.to_str().unwrap()], HYPERBOLIC_1);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&file).unwrap(),
        "{\"class\":\"hyperbolic\",\"det\":-1.0}\n"
    );
}

#[test]
fn bishop_takagi_and_consim_run() {
    let pair = r#"{"n":2,"A":[[[1,0],[0,0]],[[0,0],[1,0]]],"B":[[[0.5,0],[0,0]],[[0,0],[0,2]]]}"#;
    let bishop = parse(&crpoint(&["bishop"], pair));
    let gammas: Vec<f64> = serde_json::from_value(bishop["gammas"].clone()).unwrap();
    assert!((gammas[0] - 0.5).abs() < 1e-10 && (gammas[1] - 2.0).abs() < 1e-10, "{gammas:?}");

    let takagi = parse(&crpoint(&["takagi"], r#"[[[0,0],[3,0]],[[3,0],[0,0]]]"#));
    let sigma: Vec<f64> = serde_json::from_value(takagi["sigma"].clone()).unwrap();
    assert!((sigma[0] - 3.0).abs() < 1e-12 && (sigma[1] - 3.0).abs() < 1e-12);

    let consim = crpoint(&["consim", "--seed", "2"], r#"[[[2,0],[0,0]],[[0,0],[-1,0]]]"#);
    assert_eq!(consim.status.code(), Some(0), "{}", stdout(&consim));
    assert!(parse(&consim).get("S").is_some());
}

#[test]
fn surface_from_pair_and_from_path_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"pair":{"n":1,"A":[[[1,0]]],"B":[[[0.5,0]]]},"epsilon":0.5}"#;
    let out = parse(&crpoint(&["surface", "--grid", "11"], spec));
    assert_eq!(out["points"].as_array().unwrap().len(), 1);

    let path = parse(&crpoint(&["homotopy"], r#"{"n":1,"A":[[[1,0]]],"B":[[[2,0]]]}"#))["path"].clone();
    std::fs::write(dir.path().join("p.json"), path.to_string()).unwrap();
    let spec_file = dir.path().join("surface.json");
    std::fs::write(&spec_file, r#"{"path_file":"p.json","epsilon":0.5}"#).unwrap();
    let out = crpoint(&["surface", "--input", spec_file.to_str().unwrap(), "--radius", "0.6"], "");
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let roots = parse(&out)["points"].as_array().unwrap().clone();
    assert_eq!(roots.len(), 1);
}

#[test]
fn surface_needs_exactly_one_source() {
    let out = crpoint(&["surface"], r#"{"epsilon":0.5}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn levi_reports_match_sample_count() {
    let out = crpoint(&["levi", "--model", "mixed", "--n", "2", "--samples", "101", "--seed", "3"], "");
    assert_eq!(out.status.code(), Some(0));
    let reports = parse(&out);
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 101);
    for r in reports {
        let total = r["num_positive"].as_u64().unwrap() + r["num_negative"].as_u64().unwrap() + r["num_zero"].as_u64().unwrap();
        assert_eq!(total, 3);
    }
    let bad = crpoint(&["levi", "--model", "cubic"], "");
    assert_eq!(bad.status.code(), Some(2));
}
