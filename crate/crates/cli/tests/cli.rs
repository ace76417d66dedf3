use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "models", name]
        .iter()
        .collect()
}

fn rcm(args: &[&str], path: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcm"))
        .args(&args[..1])
        .arg(path)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SPLIT_TOP: &str = "\
hierarchy {
  base f1 f2;
  link f1 -> 1;
  link f2 -> 0;
}

state s1 outcome 1 {
  facts f1 f2;
  rule {f1} -> 1;
}

state s2 outcome 0 {
  facts f1 f2;
  rule {f2} -> 0;
}

query x {
  facts f1 f2;
}
";

const SPARSE: &str = "\
hierarchy {
  base f1 f2;
  intermediate p;
  link f1 -> p;
  link p -> 1;
  link f2 -> 1;
}

state s1 outcome 1 {
  facts f2;
  rule {f2} -> 1;
}

query x {
  facts f2;
}
";

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&rcm(&["validate"], &golden("c_ex.rcm"))), 0);
    assert_eq!(code(&rcm(&["validate"], &dir.path().join("none.rcm"))), 3);
    let bad = write(&dir, "bad.rcm", "hierarchy { base f1; link f1 -> ; }\n");
    let out = rcm(&["validate"], &bad);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":1:"));
    let c2 = write(
        &dir,
        "c2.rcm",
        "hierarchy {\n  base f1;\n  link f1 -> 1;\n}\nstate s outcome 0 {\n  facts f1;\n  rule {f1} -> 1;\n}\n",
    );
    let out = rcm(&["validate", "--json"], &c2);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["valid"], false);
}

#[test]
fn consistency_reports_witnesses() {
    let out = rcm(&["consistency"], &golden("c_ex.rcm"));
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).ends_with("consistent\n"));

    let out = rcm(
        &["consistency", "--json", "--concern", "r"],
        &golden("example10.rcm"),
    );
    assert_eq!(code(&out), 10);
    let v = json(&out);
    assert_eq!(v["consistent"], false);
    let w = &v["concerns"][0]["witnesses"][0];
    assert_eq!(v["concerns"][0]["concern"], "r/r'");
    assert_eq!(w["against"], serde_json::json!(["f5"]));
    assert_eq!(w["favor"], serde_json::json!(["f4"]));

    let out = rcm(&["consistency", "--concern", "p"], &golden("example10.rcm"));
    assert_eq!(code(&out), 0);
    let out = rcm(&["consistency", "--concern", "z"], &golden("example10.rcm"));
    assert_eq!(code(&out), 2);
}

#[test]
fn decide_trace_and_exit_codes() {
    let out = rcm(&["decide", "--case", "s3", "--json"], &golden("c_ex.rcm"));
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["final"]["verdict"], "0");
    assert_eq!(v["model"]["case"], "s3");
    assert_eq!(v["model"]["digest"].as_str().unwrap().len(), 64);
    let top = v["stages"].as_array().unwrap().last().unwrap();
    assert_eq!(top["cite_against"]["states"], serde_json::json!(["s2"]));
    assert!(v["authority"].is_null());
    let again = rcm(&["decide", "--case", "s3", "--json"], &golden("c_ex.rcm"));
    assert_eq!(out.stdout, again.stdout);

    let out = rcm(
        &["decide", "--case", "sstar", "--solutions", "--json"],
        &golden("example10.rcm"),
    );
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["solutions"].as_array().unwrap().len(), 6);
    let r = v["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["concern"] == "r/r'")
        .unwrap();
    assert_eq!(r["ambiguity"], "ambiguous");
    assert_eq!(r["negligible"], true);

    let out = rcm(&["decide", "--case", "sstar"], &golden("courts.rcm"));
    assert_eq!(code(&out), 12);
    let out = rcm(
        &["decide", "--case", "sstar", "--authority", "--json"],
        &golden("courts.rcm"),
    );
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["final"]["verdict"], "0");
    let statuses = v["authority"]["statuses"].as_array().unwrap();
    assert!(statuses.iter().any(|s| s["state"] == "s8"
        && s["concern"] == "p/p'"
        && s["status"] == "overruled"
        && s["by"] == "s9"));
    assert!(statuses
        .iter()
        .any(|s| s["state"] == "s10" && s["concern"] == "r/r'" && s["status"] == "per-incuriam"));

    let dir = tempfile::tempdir().unwrap();
    let split = write(&dir, "split.rcm", SPLIT_TOP);
    assert_eq!(code(&rcm(&["decide", "--case", "x"], &split)), 11);

    assert_eq!(
        code(&rcm(&["decide", "--case", "s1"], &golden("c_ex.rcm"))),
        2
    );
    assert_eq!(
        code(&rcm(&["decide", "--case", "nope"], &golden("c_ex.rcm"))),
        2
    );
    assert_eq!(
        code(&rcm(
            &["decide", "--case", "s3", "--authority"],
            &golden("c_ex.rcm")
        )),
        1
    );
}

#[test]
fn explain_shows_containment_checks() {
    let out = rcm(
        &["explain", "--case", "s3", "--concern", "r"],
        &golden("c_ex.rcm"),
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("s2: decided r'"));
    assert!(text.contains("citable for r'"));
    assert!(text.contains("f6 ∉ {f5}"));
    let s1 = &text[text.find("s1:").unwrap()..text.find("s2:").unwrap()];
    assert!(s1.contains("not citable"));

    let dir = tempfile::tempdir().unwrap();
    let sparse = write(&dir, "sparse.rcm", SPARSE);
    let out = rcm(
        &["explain", "--case", "x", "--concern", "p", "--json"],
        &sparse,
    );
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["raised"], false);
    assert_eq!(v["entries"], serde_json::json!([]));

    let out = rcm(
        &["explain", "--case", "s1", "--concern", "p"],
        &golden("c_ex.rcm"),
    );
    assert_eq!(code(&out), 2);
    let out = rcm(
        &["explain", "--case", "s3", "--concern", "z"],
        &golden("c_ex.rcm"),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn fmt_round_trips_golden_files() {
    for name in ["c_ex.rcm", "prop1.rcm", "example10.rcm", "courts.rcm"] {
        let path = golden(name);
        let out = rcm(&["fmt"], &path);
        assert_eq!(code(&out), 0);
        assert_eq!(stdout(&out), std::fs::read_to_string(&path).unwrap());
        assert_eq!(code(&rcm(&["fmt", "--check"], &path)), 0);
    }
    let dir = tempfile::tempdir().unwrap();
    let messy = write(&dir, "messy.rcm", SPLIT_TOP.replace("  ", "    ").as_str());
    assert_eq!(code(&rcm(&["fmt", "--check"], &messy)), 1);
    assert_eq!(code(&rcm(&["fmt", "--write"], &messy)), 0);
    assert_eq!(code(&rcm(&["fmt", "--check"], &messy)), 0);
}

#[test]
fn oracle_is_hidden_and_agrees() {
    let help = Command::new(env!("CARGO_BIN_EXE_rcm"))
        .arg("--help")
        .output()
        .unwrap();
    assert!(!stdout(&help).contains("oracle"));
    let out = Command::new(env!("CARGO_BIN_EXE_rcm"))
        .args(["oracle", "check"])
        .arg(golden("example10.rcm"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).ends_with("agree\n"));
}

#[test]
fn output_ignores_no_color() {
    let plain = rcm(&["decide", "--case", "s3"], &golden("c_ex.rcm"));
    let nocolor = Command::new(env!("CARGO_BIN_EXE_rcm"))
        .env("NO_COLOR", "1")
        .args(["decide"])
        .arg(golden("c_ex.rcm"))
        .args(["--case", "s3"])
        .output()
        .unwrap();
    assert_eq!(plain.stdout, nocolor.stdout);
    assert!(!stdout(&plain).contains('\u{1b}'));
}
