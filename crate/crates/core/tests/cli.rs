use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use torifold::catalog;

fn torifold(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_torifold"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    let mut pipe = child.stdin.take().unwrap();
    if let Some(text) = stdin {
        pipe.write_all(text.as_bytes()).unwrap();
    }
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}): {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn bundled_scenarios_reach_their_verdicts() {
    for s in catalog::scenarios() {
        let args: Vec<&str> = s.args.iter().map(String::as_str).collect();
        let out = torifold(&args, None);
        let r = report(&out);
        assert_eq!(r["verdict"], s.verdict.as_str(), "{}", s.name);
        assert_eq!(out.status.code(), Some(s.exit_code), "{}", s.name);
        assert_eq!(r["exit_code"], s.exit_code, "{}", s.name);
    }
}

#[test]
fn reports_are_deterministic() {
    let args = ["fibrate", "--mesh", "builtin:torus8", "--forms", "builtin:torus8_beta1", "builtin:torus8_dy"];
    let a = torifold(&args, None);
    let b = torifold(&args, None);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn mesh_and_forms_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    let form = dir.path().join("form.json");
    let out = torifold(&["gen-mesh", "torus", "--res", "6", "--out", mesh.to_str().unwrap()], None);
    assert!(out.status.success());
    let out = torifold(
        &["gen-form", "--mesh", mesh.to_str().unwrap(), "--coefficients", "0,1", "--out", form.to_str().unwrap()],
        None,
    );
    assert!(out.status.success());
    let out = torifold(&["cohomology", "--mesh", mesh.to_str().unwrap(), "--forms", form.to_str().unwrap()], None);
    let r = report(&out);
    assert_eq!(r["result"]["betti"], 2);
    let inputs = r["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert_eq!(inputs[0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn mesh_is_read_from_stdin_by_default() {
    let out = torifold(&["cohomology"], catalog::mesh("klein8"));
    let r = report(&out);
    assert_eq!(r["result"]["betti"], 1);
    assert_eq!(r["result"]["orientable"], false);
}

#[test]
fn report_written_to_file_prints_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = torifold(
        &["check-system", "--system", "builtin:oscillator", "--samples", "200", "--format", "csv", "--out", path.to_str().unwrap()],
        None,
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("commutative Liouville"));
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# report\n"));
}

#[test]
fn input_errors_exit_2() {
    let out = torifold(&["cohomology"], Some("not json"));
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let out = torifold(&["check-system", "--system", "/nonexistent/system.json"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = torifold(&["detect-torus", "--system", "builtin:so3", "--level", "1,5", "--guess", "2,0"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = torifold(&["fibrate", "--mesh", "builtin:octahedron", "--forms", "builtin:torus8_dy"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = torifold(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inconclusive_torus_exits_1() {
    // the guess sits where the second integral has zero gradient
    let out = torifold(
        &["detect-torus", "--system", "builtin:oscillator", "--level", "0.5,0.5", "--guess", "1.1,0,0.9,0"],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(r["verdict"].as_str().unwrap().starts_with("inconclusive"), "{}", r["verdict"]);
}
