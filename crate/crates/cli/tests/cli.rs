use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bagdet"));
    cmd.env_remove("BAGDET_CONFIG");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(p).expect("golden file")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            stdout(o),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

#[test]
fn decide_worked_example_matches_golden() {
    let (q, v) = (fixture("worked_q.cq"), fixture("worked_v.cq"));
    let o = run(&["decide", "--query", p(&q), "--views", p(&v)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("decide_worked.json"));
    let j = json(&o);
    assert_eq!(j["determined"], true);
    assert_eq!(j["coefficients"], serde_json::json!(["3", "-1"]));
}

#[test]
fn decide_output_is_byte_identical_across_runs() {
    let (q, v) = (fixture("twopath_q.cq"), fixture("twopath_v.cq"));
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let oa = run(&["decide", "--query", p(&q), "--views", p(&v), "--out-dir", p(a.path())]);
    let ob = run(&["decide", "--query", p(&q), "--views", p(&v), "--out-dir", p(b.path())]);
    assert_eq!(oa.status.code(), Some(1));
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["witness.json", "trace.json", "d.facts", "d_prime.facts"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn path_decide_abcd_matches_golden() {
    let o = run(&["path-decide", "--query", "ABCD", "--views", "ABC,BC,BCD"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("path_decide_abcd.json"));
    assert_eq!(json(&o)["walk"], "ABCC⁻¹B⁻¹BCD");
}

#[test]
fn path_decide_ab_writes_witness() {
    let dir = tempdir().unwrap();
    let o = run(&["path-decide", "--query", "AB", "--views", "A", "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let j = json(&o);
    assert_eq!(j["determined"], false);
    assert_eq!(j["report"]["passed"], true);
    let (d, dp) = (dir.path().join("d.facts"), dir.path().join("d_prime.facts"));
    let o = run(&["verify", "--path-query", "AB", "--views", "A", "--d", p(&d), "--d-prime", p(&dp)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["endpoint_in_d"], "1");
}

#[test]
fn witness_then_verify_from_files() {
    let (q, v) = (fixture("twopath_q.cq"), fixture("twopath_v.cq"));
    let dir = tempdir().unwrap();
    let o = run(&["witness", "--query", p(&q), "--views", p(&v), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["witness_verified"], true);
    let w = dir.path().join("witness.json");
    let o = run(&["verify", "--query", p(&q), "--views", p(v.as_path()), "--witness", p(&w)]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!(j["passed"], true);
    assert_eq!(j["condition_a"], true);
    let (d, dp) = (dir.path().join("d.facts"), dir.path().join("d_prime.facts"));
    let o = run(&["verify", "--query", p(&q), "--views", p(&v), "--d", p(&d), "--d-prime", p(&dp)]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_rejects_tampered_structure() {
    let (q, v) = (fixture("twopath_q.cq"), fixture("twopath_v.cq"));
    let dir = tempdir().unwrap();
    let o = run(&["witness", "--query", p(&q), "--views", p(&v), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let d = dir.path().join("d.facts");
    let text = fs::read_to_string(&d).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(0);
    fs::write(&d, lines.join("\n")).unwrap();
    let dp = dir.path().join("d_prime.facts");
    let o = run(&["verify", "--query", p(&q), "--views", p(&v), "--d", p(&d), "--d-prime", p(&dp)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["passed"], false);
}

#[test]
fn verify_rejects_tampered_witness_file() {
    let (q, v) = (fixture("twopath_q.cq"), fixture("twopath_v.cq"));
    let dir = tempdir().unwrap();
    run(&["witness", "--query", p(&q), "--views", p(&v), "--out-dir", p(dir.path())]);
    let w = dir.path().join("witness.json");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&w).unwrap()).unwrap();
    let nodes = doc["d_prime"]["nodes"].as_array_mut().unwrap();
    let base = nodes
        .iter_mut()
        .find(|n| n["op"] == "base" && n["facts"].as_array().is_some_and(|f| f.len() > 1))
        .expect("a base node with two facts");
    // dropping the R-fact changes the view count; dropping S would not
    base["facts"].as_array_mut().unwrap().remove(0);
    fs::write(&w, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let o = run(&["verify", "--query", p(&q), "--views", p(&v), "--witness", p(&w)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["condition_b"], false);
}

#[test]
fn h10_encode_and_witness() {
    let inst = fixture("x_minus_1.h10");
    let dir = tempdir().unwrap();
    let o = run(&["h10-encode", "--instance", p(&inst), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["view_count"], 3);
    let views = fs::read_to_string(dir.path().join("views.cq")).unwrap();
    assert!(views.contains("vi() :- X1(y1_1), H()."));
    assert!(views.contains("vi() :- C()."));
    let o = run(&["h10-witness", "--instance", p(&inst), "--solution", "x1=1", "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!(j["report"]["query_d"], "1");
    assert_eq!(j["report"]["query_d_prime"], "0");
    let (d, dp) = (dir.path().join("d.facts"), dir.path().join("d_prime.facts"));
    let o = run(&["verify", "--instance", p(&inst), "--d", p(&d), "--d-prime", p(&dp)]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify", "--instance", p(&inst), "--d", p(&d), "--d-prime", p(&d)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn h10_witness_rejects_non_solution() {
    let inst = fixture("x_minus_1.h10");
    let o = run(&["h10-witness", "--instance", p(&inst), "--solution", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a solution"));
}

#[test]
fn eval_counts_and_bags() {
    let dir = tempdir().unwrap();
    let s = dir.path().join("cycle.facts");
    fs::write(&s, "R(a,b)\nR(b,c)\nR(c,a)\n").unwrap();
    let q = dir.path().join("q.cq");
    fs::write(&q, "q() :- R(x,y), R(y,z).\n").unwrap();
    let o = run(&["eval", "--query", p(&q), "--structure", p(&s)]);
    assert_eq!(json(&o)["count"], "3");
    let o = run(&["eval", "--path", "RR", "--structure", p(&s)]);
    assert_eq!(json(&o)["bag"].as_array().unwrap().len(), 3);
}

#[test]
fn errors_exit_with_two() {
    let o = run(&["decide", "--query", "/nonexistent/q.cq"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
    let o = run(&["decide", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempdir().unwrap();
    let q = dir.path().join("q.cq");
    fs::write(&q, "q() :- R(x,y) S(y,z).\n").unwrap();
    let o = run(&["decide", "--query", p(&q)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:"));
}

#[test]
fn limit_exceeded_exits_with_two() {
    let (q, v) = (fixture("worked_q.cq"), fixture("worked_v.cq"));
    let o = run(&["decide", "--query", p(&q), "--views", p(&v), "--max-nodes", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("limit"));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"max_search_nodes": 2, "output_format": "text"}"#).unwrap();
    let (q, v) = (fixture("worked_q.cq"), fixture("worked_v.cq"));
    let args = ["decide", "--query", p(&q), "--views", p(&v)];
    let o = bin().args(args).env("BAGDET_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(args)
        .args(["--max-nodes", "1000000"])
        .env("BAGDET_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("determined: true"));
    fs::write(&cfg, r#"{"max_search_nodes": 0}"#).unwrap();
    let o = bin().args(args).env("BAGDET_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest", "--trials", "30", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!(j["passed"], true);
    assert_eq!(j["seed"], 5);
}
