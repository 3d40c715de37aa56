use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[time]
t_final = 0.01
windows = 4

[discretization]
k = 2
nx = 8
nz = 4
fsp_substeps = 4

[output]
cadence = 2
"#;

fn fsisplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsisplit")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn run_writes_the_output_set_and_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();

    let out = fsisplit(&["run", "--config", &config, "--out", out_str]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["windows"], 4);
    for name in ["manifest.json", "ledger.csv", "windows.csv", "fields/r_0.csv", "fields/r_4.csv"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["time"]["windows"], 4);

    let again = fsisplit(&["run", "--config", &config, "--out", out_str]);
    assert_eq!(again.status.code(), Some(2));
    let forced = fsisplit(&["run", "--config", &config, "--out", out_str, "--force"]);
    assert_eq!(forced.status.code(), Some(0));
}

#[test]
fn bad_configuration_exits_with_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.toml", "[time]\nwindows = 0\n");
    let out = fsisplit(&["run", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");

    let typo = write(dir.path(), "typo.toml", "[time]\nwindow = 4\n");
    let out = fsisplit(&["run", "--config", &typo, "--out", dir.path().join("p").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("absent.toml");
    let out = fsisplit(&["bases", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_runs_the_built_in_suite() {
    let out = fsisplit(&["check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 1);
    assert!(!text.contains("FAIL"));
    assert_eq!(fsisplit(&["check", "--filter", "no-such-check"]).status.code(), Some(2));
}

#[test]
fn bases_reports_and_dumps_the_basis() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    let dump = dir.path().join("bases.json");
    let out = fsisplit(&["bases", "--config", &config, "--dump", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["k"], 2);
    let dumped: serde_json::Value = serde_json::from_str(&fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(dumped, report);
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(
        dir.path(),
        "plan.toml",
        r#"
reduction = "coupling_gap"

[base.time]
t_final = 0.01

[base.discretization]
k = 2
nx = 8
nz = 4
fsp_substeps = 4

[[axes]]
parameter = "time.windows"
values = [2, 4, 8]
"#,
    );
    let out_dir = dir.path().join("sweep");
    let out = fsisplit(&["sweep", "--plan", &plan, "--out", out_dir.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(out_dir.join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "point,time.windows,status,passed,coupling_gap");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,2,completed,"));
    assert!(out_dir.join("cauchy.csv").exists());
}
