//! End-to-end tests of the `sinai-lab` binary: exit codes, file outputs,
//! determinism of the persisted bytes, and the report round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sinai-lab"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited with a code")
}

#[test]
fn unknown_config_key_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "bad.json",
        r#"{"law": {"kind": "two-point", "p": 0.3}, "suite": "density", "sedd": 7, "seed": 7}"#,
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sedd"), "stderr should name the bad key: {err}");
}

#[test]
fn missing_seed_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "noseed.json",
        r#"{"law": {"kind": "two-point", "p": 0.3}, "suite": "density"}"#,
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn run_writes_results_and_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "renewal.json",
        r#"{"law": {"kind": "two-point", "p": 0.3}, "suite": "renewal",
            "seed": 11, "h": 6.0, "n_envs": 2000}"#,
    );
    let out_dir = dir.path().join("results");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("renewal.json").exists());
    assert!(out_dir.join("renewal.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("renewal.json")).unwrap())
            .unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["pass"], true);

    let rep = bin().arg("report").arg(&out_dir).output().unwrap();
    assert_eq!(code(&rep), 0);
    let md = String::from_utf8_lossy(&rep.stdout);
    assert!(md.contains("## renewal - PASS"), "{md}");
    assert!(out_dir.join("report.md").exists());

    // Rendering again (with report.md now present) must not change a byte.
    let rep2 = bin().arg("report").arg(&out_dir).output().unwrap();
    assert_eq!(rep.stdout, rep2.stdout);
}

#[test]
fn failing_suite_exits_2_and_report_propagates() {
    let dir = tempfile::tempdir().unwrap();
    // At n = 64 with these diagnostic parameters no environment qualifies
    // within the attempt budget, so the quota check fails honestly.
    let cfg = write_cfg(
        dir.path(),
        "coupling.json",
        r#"{"law": {"kind": "two-point", "p": 0.3}, "suite": "coupling", "seed": 5,
            "n": 64, "n_envs": 5, "max_attempts": 256,
            "event_params": {"c1": 0.1, "c2": 0.1, "delta1": 0.65, "relaxed": true}}"#,
    );
    let out_dir = dir.path().join("results");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let rep = bin().arg("report").arg(&out_dir).output().unwrap();
    assert_eq!(code(&rep), 2);
    assert!(String::from_utf8_lossy(&rep.stdout).contains("coupling - FAIL"));
}

#[test]
fn compliant_event_params_at_desk_scale_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "events.json",
        r#"{"law": {"kind": "two-point", "p": 0.3}, "suite": "events",
            "seed": 3, "n": 16384, "n_envs": 10}"#,
    );
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("r")).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("h~_n"));
}

#[test]
fn report_on_empty_dir_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("No suite results found"));
}

#[test]
fn density_table_defaults_match_spec_shape() {
    let out = bin().args(["density", "table"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,phi,error_bound");
    assert_eq!(lines.len(), 1 + 1001, "inclusive grid from -5 to 5 step 0.01");
    let center = lines.iter().find(|l| l.starts_with("0,")).expect("x = 0 row");
    assert!(center.starts_with("0,0.5,"), "{center}");
}

#[test]
fn density_table_accepts_negative_bounds() {
    let out = bin()
        .args(["density", "table", "--from", "-1", "--to", "1", "--step", "0.5", "--tol", "1e-9"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 6);
}

#[test]
fn bad_cli_flag_exits_1_not_2() {
    let out = bin().args(["run", "--nonsense"]).output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn shipped_example_reproduces_golden_csv() {
    let root = workspace_root();
    let cfg = root.join("examples/renewal_h12.json");
    let golden = root.join("examples/renewal_h12.golden.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let produced = std::fs::read_to_string(dir.path().join("renewal.csv")).unwrap();
    let expected = std::fs::read_to_string(&golden).unwrap();
    assert_eq!(produced, expected, "golden CSV drifted");
}
