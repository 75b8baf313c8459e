use std::path::Path;
use std::process::{Command, Output};

fn filamap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_filamap"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path) {
    let out = filamap(&["synth", "--seed", "3", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(filamap(&["--help"]).status.code(), Some(0));
    assert_eq!(filamap(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let o = filamap(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR\t"));
    let o = filamap(&["pyramid", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR\t"));
}

#[test]
fn unknown_scene_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path());
    let cfg = d.path().join("run.toml");
    let o = filamap(&["contrast", "--config", cfg.to_str().unwrap(), "--scene", "NOPE"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NOPE"));
}

#[test]
fn corrupt_scene_is_a_data_error() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path());
    std::fs::write(d.path().join("scenes/S2019_00.sgrd"), b"SGRD\x02garbage").unwrap();
    let cfg = d.path().join("run.toml");
    let o = filamap(&["pyramid", "--config", cfg.to_str().unwrap(), "--scene", "S2019_00"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR\t"));
}

#[test]
fn analyze_without_enough_samples_exits_two() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path());
    let series = d.path().join("short.csv");
    std::fs::write(
        &series,
        "domain,iso_utc_hour,C,U_0,U_m2,U_m1,U_p1,U_p2,delta_h\n\
         x,2019-06-01T22:00:00Z,0.1,5,5,5,5,5,1\n\
         x,2019-06-02T22:00:00Z,0.2,6,6,6,6,6,1\n",
    )
    .unwrap();
    let base = std::fs::read_to_string(d.path().join("run.toml")).unwrap();
    let cfg = d.path().join("short.toml");
    std::fs::write(
        &cfg,
        base.replace("output = \"out\"", "output = \"out\"\nseries = \"short.csv\""),
    )
    .unwrap();
    let o = filamap(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let summary = std::fs::read_to_string(d.path().join("out/analysis/summary.txt")).unwrap();
    assert!(summary.contains("skipped\tx"));
}

#[test]
fn full_run_writes_expected_files() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path());
    let cfg = d.path().join("run.toml");
    let cfg = cfg.to_str().unwrap();
    for cmd in ["collocate", "bin", "analyze"] {
        let o = filamap(&[cmd, "--config", cfg]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let out = d.path().join("out");
    for f in [
        "collocation_summary.csv",
        "matches.csv",
        "dedup_report.txt",
        "series.csv",
        "bin_report.txt",
        "seasonal.csv",
        "analysis/correlations.csv",
        "analysis/summary.txt",
        "analysis/dependence_north.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let dep = std::fs::read_to_string(out.join("analysis/dependence_north.csv")).unwrap();
    assert_eq!(dep.lines().count(), 101);
}
