use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gridlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn singleton_config_gives_one_frontier_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "base.json", "{}");
    let out = tmp.path().join("out");
    let o = gridlab(&["run", "--config", &cfg, "--synthetic", "42", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&out.join("frontier.csv")), 1);
    assert_eq!(rows(&out.join("failures.csv")), 0);
    assert_eq!(rows(&out.join("annual.csv")), 10);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenarios"], 1);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn standard_grid_gives_189_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gridlab(&["standard-grid"]);
    assert!(o.status.success());
    let cfg = write_config(tmp.path(), "grid.json", &String::from_utf8(o.stdout).unwrap());
    let out = tmp.path().join("out");
    let o = gridlab(&["run", "--config", &cfg, "--synthetic", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&out.join("frontier.csv")), 189);
    assert_eq!(rows(&out.join("annual.csv")), 1890);
}

#[test]
fn parallelism_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "grid.json",
        r#"{"re_2030": [300, 450, 550], "flex_limit": [0.55, 0.7], "new_option": ["battery_re", "ocgt"]}"#,
    );
    let mut dirs = Vec::new();
    for par in ["1", "8"] {
        let out = tmp.path().join(format!("out{par}"));
        let o = gridlab(&[
            "run",
            "--config",
            &cfg,
            "--synthetic",
            "9",
            "--parallelism",
            par,
            "--year-detail",
            "2028",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dirs.push(out);
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "manifest.json")
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "mix_2028.csv"));
    for name in names {
        let a = fs::read(dirs[0].join(&name)).unwrap();
        let b = fs::read(dirs[1].join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn validate_only_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = gridlab(&["run", "--synthetic", "1", "--validate-only", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 scenarios, 0 invalid"));
    assert!(!out.exists());

    let cfg = write_config(tmp.path(), "bad.json", r#"{"flex_limit": [0.6, 1.5]}"#);
    let o = gridlab(&["run", "--config", &cfg, "--synthetic", "1", "--validate-only"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("flex_limit=1.5"));
}

#[test]
fn failed_scenario_is_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "grid.json", r#"{"flex_limit": [0.6, 1.5]}"#);
    let out = tmp.path().join("out");
    let o = gridlab(&["run", "--config", &cfg, "--synthetic", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("flex_limit=1.5"));
    assert_eq!(rows(&out.join("frontier.csv")), 1);
    let failures = fs::read_to_string(out.join("failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 2);
    assert!(failures.contains("flex_limit=1.5"));
}

#[test]
fn bad_inputs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo.json", r#"{"flex_limt": 0.6}"#);
    let o = gridlab(&["run", "--config", &cfg, "--synthetic", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("flex_limt"));

    // A data source is required.
    let o = gridlab(&["run"]);
    assert!(!o.status.success());

    let o = gridlab(&["run", "--data", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_directory_round_trip() {
    use gridlab::shapes::{synth_shapes, synth_solar_shape, write_shape_csv, write_timeseries_csv};
    let tmp = tempfile::tempdir().unwrap();
    write_timeseries_csv(tmp.path().join("timeseries.csv"), &synth_shapes(4, 1.0)).unwrap();
    write_shape_csv(tmp.path().join("solar_shape.csv"), &synth_solar_shape(4)).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = gridlab(&["run", "--data", tmp.path().to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = gridlab(&["run", "--synthetic", "4", "--out", b.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(a.join("frontier.csv")).unwrap(),
        fs::read(b.join("frontier.csv")).unwrap()
    );
}
