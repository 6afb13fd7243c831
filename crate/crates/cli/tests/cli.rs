use std::path::Path;
use std::process::{Command, Output};

fn magkit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("MAGKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const HEAT_K1: &str = r#"{"kind":"heat-paths","problem":{"d":1,"k":1,"sources":[[0.0]]},"physics":{"epsilon":0.5},"time":{"s1":1.0,"h":0.05},"seed":3}"#;

#[test]
fn missing_epsilon_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"kind":"heat-paths","problem":{"d":1,"k":2,"sources":[[-1.0],[1.0]]}}"#);
    let out = magkit(&["run", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("physics.epsilon"));
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"kind":"heat-paths","problem":{"d":1,"k":1,"sources":[[0.0]]},"physics":{"epsilon":0.5,"epsilonn":1.0}}"#,
    );
    let out = magkit(&["run", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilonn"));
}

#[test]
fn minimal_heat_paths_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), HEAT_K1);
    let out = magkit(&["run", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");
    let csv = std::fs::read_to_string(run.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("clock,time,pos_0"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "heat-paths");
    assert_eq!(manifest["seed"], 3);

    let plot = magkit(&["plot", "--run", "run", "--what", "trajectory"], tmp.path());
    assert_eq!(plot.status.code(), Some(0));
    assert!(run.join("trajectory.svg").is_file());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), HEAT_K1);
    for dir in ["a", "b"] {
        assert_eq!(magkit(&["run", "--config", &cfg, "--out", dir], tmp.path()).status.code(), Some(0));
    }
    for name in ["trajectory.csv", "trajectory.svg", "manifest.json"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn plot_of_missing_inputs_fails() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("empty")).unwrap();
    for what in ["trajectory", "cloud-film", "error-curves"] {
        let out = magkit(&["plot", "--run", "empty", "--what", what], tmp.path());
        assert_eq!(out.status.code(), Some(1), "{what}");
    }
    let out = magkit(&["plot", "--run", "nowhere", "--what", "trajectory"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_magkit"))
        .args(["check", "--suite", "exponents"])
        .env("MAGKIT_THREADS", "zero")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_suite_prints_one_line_per_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out = magkit(&["check", "--suite", "exponents"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("PASS"));
    assert_eq!(magkit(&["check", "--suite", "nonsense"], tmp.path()).status.code(), Some(1));
}

#[test]
fn branching_run_and_film() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"kind":"branching","problem":{"d":1,"k":2,"sources":[[-1.0],[1.0]]},"physics":{"epsilon":0.1},"branching":{"n":200},"seed":1}"#,
    );
    assert_eq!(magkit(&["run", "--config", &cfg, "--out", "br"], tmp.path()).status.code(), Some(0));
    let br = tmp.path().join("br");
    assert!(br.join("branch_events.jsonl").is_file());
    let out = magkit(&["plot", "--run", "br", "--what", "cloud-film"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(br.join("cloud_000.svg").is_file());
}

#[test]
fn identity_suite_run_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"kind":"identity-suite","problem":{"d":1,"k":2,"sources":[[-1.0],[1.0]]}}"#);
    let out = magkit(&["run", "--config", &cfg, "--out", "ids"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ids = tmp.path().join("ids");
    assert!(ids.join("report.json").is_file());
    assert_eq!(magkit(&["plot", "--run", "ids", "--what", "error-curves"], tmp.path()).status.code(), Some(0));
}
