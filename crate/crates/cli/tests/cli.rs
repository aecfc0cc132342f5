use std::path::Path;
use std::process::{Command, Output};

fn idi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idi")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const Z_ONLY: &str = r#"seed = 2
duration_ms = 300
sensing_channels = [15]

[[source]]
label = "Z"
oat_us = 1568
inr_db = 20
pattern = { kind = "periodic", period_us = 60000 }
channel = { kind = "fixed", channel = 15 }
"#;

#[test]
fn usage_and_help_codes() {
    assert_eq!(code(&idi(&[])), 1);
    assert_eq!(code(&idi(&["frobnicate"])), 1);
    assert_eq!(code(&idi(&["train", "--method", "ct9", "--data", "x", "-o", "y"])), 1);
    assert_eq!(code(&idi(&["--help"])), 0);
    assert_eq!(code(&idi(&["--version"])), 0);
}

#[test]
fn missing_inputs_are_data_errors() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("o");
    let o = idi(&["evaluate", "--model", "/nonexistent/model.json", "--data", "/nonexistent.csv", "-o", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("idi: "));
}

#[test]
fn zero_duration_writes_headers_only() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("zero.toml");
    std::fs::write(&cfg, Z_ONLY.replace("duration_ms = 300", "duration_ms = 0")).unwrap();
    let out = t.path().join("o");
    assert_eq!(code(&idi(&["simulate", "--config", s(&cfg), "-o", s(&out)])), 0);
    let features = std::fs::read_to_string(out.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 2, "{features}");
}

#[test]
fn bad_config_names_the_line() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("bad.toml");
    std::fs::write(&cfg, Z_ONLY.replace("label = \"Z\"", "label = \"Q\"")).unwrap();
    let o = idi(&["simulate", "--config", s(&cfg), "-o", s(&t.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.toml:6"), "{}", stderr(&o));
}

#[test]
fn bad_feature_column_is_named() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("z.toml");
    std::fs::write(&cfg, Z_ONLY).unwrap();
    let sim = t.path().join("sim");
    assert_eq!(code(&idi(&["simulate", "--config", s(&cfg), "-o", s(&sim)])), 0);
    let text = std::fs::read_to_string(sim.join("features.csv")).unwrap().replacen("f_sd", "f_xx", 1);
    let data = t.path().join("broken.csv");
    std::fs::write(&data, text).unwrap();
    let o = idi(&["train", "--data", s(&data), "--method", "ct2", "-o", s(&t.path().join("m"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("f_xx"), "{}", stderr(&o));
}

#[test]
fn svm_iteration_cap_is_nonconvergence() {
    let t = tempfile::tempdir().unwrap();
    let bench = t.path().join("bench");
    assert_eq!(code(&idi(&["simulate", "--benchmark", "--per-class", "60", "-o", s(&bench)])), 0);
    let o = idi(&[
        "train",
        "--data",
        s(&bench.join("train.csv")),
        "--method",
        "msvm",
        "--max-iter",
        "5",
        "-o",
        s(&t.path().join("m")),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn rerun_refuses_changed_inputs() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("z.toml");
    std::fs::write(&cfg, Z_ONLY).unwrap();
    let sim = t.path().join("sim");
    assert_eq!(code(&idi(&["simulate", "--config", s(&cfg), "-o", s(&sim)])), 0);
    let manifest = sim.join("manifest.json");
    assert_eq!(code(&idi(&["rerun", s(&manifest), "-o", s(&t.path().join("again"))])), 0);
    std::fs::write(&cfg, Z_ONLY.replace("seed = 2", "seed = 3")).unwrap();
    let o = idi(&["rerun", s(&manifest), "-o", s(&t.path().join("third"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("inputs changed"), "{}", stderr(&o));
}
