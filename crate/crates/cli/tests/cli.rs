use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn microgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microgrid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_scenarios_names_every_builtin() {
    let out = microgrid(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["balanced", "fig7", "fig8", "fig10", "fig11", "load_step"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn run_writes_requested_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "short.cfg",
        "[simulation]\nbase = fig11\nduration = 0.4\n\n[events]\nevent = 0.2 enable_offset_comp\n",
    );
    let out_dir = dir.path().join("out");
    let out = microgrid(&[
        "run",
        "--scenario",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--csv",
        "--plots",
        "--decimate",
        "4",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ts = fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    assert!(ts.starts_with("t,v_c1,v_c2,i_o1,i_o2,i_circ,"));
    assert_eq!(ts.lines().count(), 1 + 8000 / 4);
    for f in [
        "summary.txt",
        "metrics.csv",
        "messages.csv",
        "currents.svg",
        "offset_estimate.svg",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sharing_error="));
}

#[test]
fn summary_only_without_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", "[simulation]\nduration = 0.2\n");
    let out = microgrid(&["run", "--scenario", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.path().join("summary.txt").exists());
    assert!(!dir.path().join("timeseries.csv").exists());
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.cfg",
        "[simulation]\nbase = fig8\nduration = 1\n",
    );
    let out = microgrid(&["validate", &good]);
    assert_eq!(out.status.code(), Some(0));

    let bad = write(dir.path(), "bad.cfg", "[dg.1]\navi_r_v_min = -0.5\n");
    let out = microgrid(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dg.1"), "{err}");

    let garbled = write(dir.path(), "garbled.cfg", "[simulation]\nduration 1\n");
    let out = microgrid(&["validate", &garbled]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));
}

#[test]
fn unknown_scenario_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = microgrid(&[
        "run",
        "--scenario",
        "fig99",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "short.cfg",
        "[simulation]\nduration = 0.5\n\n[events]\nevent = 0.2 set_load 0.05\n",
    );
    let out = microgrid(&["run", "--scenario", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("collapsed"));
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "occupied", "");
    let cfg = write(dir.path(), "s.cfg", "[simulation]\nduration = 0.1\n");
    let out = microgrid(&["run", "--scenario", &cfg, "--out", &file]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn show_output_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = microgrid(&["show", "load_step"]);
    assert!(out.status.success());
    let cfg = write(
        dir.path(),
        "load_step.cfg",
        &String::from_utf8(out.stdout).unwrap(),
    );
    assert_eq!(microgrid(&["validate", &cfg]).status.code(), Some(0));
}

#[test]
fn reference_documents_the_sections() {
    let out = microgrid(&["reference"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for section in ["[simulation]", "[plant]", "[dg.N]", "[lbc]", "[events]"] {
        assert!(text.contains(section), "{section}");
    }
}
