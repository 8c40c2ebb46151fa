use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name)
}

fn flintc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flintc")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BROKEN: &str = "contract A {\n  var x: Int\n}\n\nA :: (any) {\n  public init() {}\n}\n";

#[test]
fn check_reports_success_and_errors() {
    let bank = corpus("bank.flint");
    assert_eq!(code(&flintc(&["check", path(&bank)])), 0);
    let asset = corpus("asset.flint");
    assert_eq!(code(&flintc(&["--no-stdlib", "check", path(&asset)])), 0);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.flint");
    std::fs::write(&bad, BROKEN).unwrap();
    let o = flintc(&["check", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("uninitialised"));
    let o = flintc(&["--format", "json", "check", path(&bad)]);
    let first = String::from_utf8_lossy(&o.stdout).lines().next().unwrap().to_string();
    assert!(serde_json::from_str::<serde_json::Value>(&first).is_ok(), "{first}");
}

#[test]
fn build_writes_ir_only_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bank.ir");
    let bank = corpus("bank.flint");
    assert_eq!(code(&flintc(&["build", path(&bank), "-o", path(&out)])), 0);
    let first = std::fs::read_to_string(&out).unwrap();
    assert_eq!(first.lines().filter(|l| l.starts_with("#pragma slot")).count(), 5);
    assert_eq!(code(&flintc(&["build", path(&bank), "-o", path(&out)])), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);

    let bad = dir.path().join("bad.flint");
    std::fs::write(&bad, BROKEN).unwrap();
    let missing = dir.path().join("bad.ir");
    assert_eq!(code(&flintc(&["build", path(&bad), "-o", path(&missing)])), 1);
    assert!(!missing.exists());
}

#[test]
fn run_executes_scripts() {
    let dao = corpus("simple_dao.flint");
    let script = corpus("scripts/simple_dao.jsonl");
    let o = flintc(&["run", path(&dao), "--script", path(&script)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = flintc(&["--format", "json", "run", path(&dao), "--script", path(&script)]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);

    let dir = tempfile::tempdir().unwrap();
    let wrong = dir.path().join("wrong.jsonl");
    let text = std::fs::read_to_string(&script).unwrap().replacen(r#""status":"ok""#, r#""status":"reverted""#, 1);
    std::fs::write(&wrong, text).unwrap();
    assert_eq!(code(&flintc(&["run", path(&dao), "--script", path(&wrong)])), 1);

    let gas = dir.path().join("gas.json");
    std::fs::write(&gas, r#"{"sstore": 5000}"#).unwrap();
    let o = flintc(&["run", path(&dao), "--script", path(&script), "--gas-table", path(&gas)]);
    assert_eq!(code(&o), 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&flintc(&["frobnicate"])), 2);
    assert_eq!(code(&flintc(&["check", "/nonexistent/file.flint"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.jsonl");
    std::fs::write(&junk, "not json\n").unwrap();
    let bank = corpus("bank.flint");
    assert_eq!(code(&flintc(&["run", path(&bank), "--script", path(&junk)])), 2);
}
