use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn pshlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pshlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn flow_config_runs_and_writes_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("flow.toml");
    let o = pshlab(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}{}", text(&o.stdout), text(&o.stderr));
    for name in [
        "summary.csv",
        "report.txt",
        "trajectory.jsonl",
        "flow_u.svg",
        "lojasiewicz.svg",
    ] {
        assert!(out.path().join(name).is_file(), "missing {name}");
    }
    let report = std::fs::read_to_string(out.path().join("report.txt")).unwrap();
    assert!(report.contains("config sha256"), "{report}");
}

#[test]
fn missing_field_is_named_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let body = std::fs::read_to_string(configs().join("flow.toml")).unwrap();
    std::fs::write(&path, body.replace("x0 = [[3.0, 0.0]]", "")).unwrap();
    let o = pshlab(&["run", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("flow.x0"), "{}", text(&o.stderr));
}

#[test]
fn degree_config_passes() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("degree.toml");
    let o = pshlab(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}{}", text(&o.stdout), text(&o.stderr));
    let mut rows = csv::Reader::from_path(out.path().join("degree.csv")).unwrap();
    let counts: Vec<String> = rows.records().map(|r| r.unwrap()[4].to_string()).collect();
    // three levels, five targets each, one preimage per target
    assert_eq!(counts.len(), 15);
    assert!(counts.iter().all(|c| c == "1"), "{counts:?}");
}

#[test]
fn example_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        pshlab::report::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    }
}

#[test]
fn empty_corpus_is_vacuous() {
    let out = tempfile::tempdir().unwrap();
    let o = pshlab(&[
        "verify",
        "--corpus",
        "empty",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(text(&o.stdout).contains("vacuous"), "{}", text(&o.stdout));
}

#[test]
fn parse_check_reports_realness() {
    let o = pshlab(&["parse-check", "z1*cj(z1)", "--dim", "1"]);
    assert!(o.status.success());
    assert!(text(&o.stdout).contains("real-valued: yes"));
    let o = pshlab(&["parse-check", "z1^2", "--dim", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pshlab(&["parse-check", "z1*(", "--dim", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
