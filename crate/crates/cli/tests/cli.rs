use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cbm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbm")).args(args).arg("--out").arg(out).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
preset = "paper_deterministic"
[arrivals]
runs = 2000
[reliability]
runs = 2000
horizon = 5.0
[validate]
cycles = 4000
runs = 4000
"#;

#[test]
fn non_positive_decay_rate_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = \"paper_deterministic\"\n[system]\ndelta = 0.0\n");
    let o = cbm(&["reliability", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("delta"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = \"paper_deterministic\"\n[system]\ndelta_typo = 0.5\n");
    let o = cbm(&["reliability", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("delta_typo"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbm(&["optimize", "--config", "no_such_preset"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn threshold_above_failure_level_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = \"paper_deterministic\"\n[policy]\npreventive_thresholds = [4.0, 12.0]\n");
    let o = cbm(&["optimize", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains('M'), "{}", stderr(&o));
}

#[test]
fn no_shock_system_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[system]\nmu = 0.0\n"));
    let out = dir.path().join("out");
    let o = cbm(&["reliability", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("lifetime.csv")).unwrap();
    assert!(text.starts_with("t,survival,hazard,hazard_limit,mc_survival"));
    // With no shocks the limiting hazard is the baseline rate.
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn empty_data_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.csv");
    fs::write(&data, "process_id,time,level\n").unwrap();
    let o = cbm(&["fit", "--data", data.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn fit_reads_external_data() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert!(cbm(&["fit"], &first).status.success());
    let data = first.join("fit_data.csv");
    let second = dir.path().join("second");
    let o = cbm(&["fit", "--data", data.to_str().unwrap()], &second);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(first.join("fit_summary.csv")).unwrap(),
        fs::read(second.join("fit_summary.csv")).unwrap()
    );
    assert!(!second.join("fit_data.csv").exists());
}

#[test]
fn impossible_tolerance_names_the_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}max_gap = 0.0\n"));
    let out = dir.path().join("out");
    let o = cbm(&["validate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("lifetime_survival_gap"), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("validation_report.csv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("lifetime_survival_gap,") && l.ends_with(",FAIL")));
    assert!(out.join("run_manifest.toml").exists());
}

#[test]
fn validate_passes_on_small_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = cbm(&["validate", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert!(o.status.success(), "{}\n{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
}

#[test]
fn manifest_records_seed_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = cbm(&["simulate-arrivals", "--config", cfg.to_str().unwrap(), "--seed", "18446744073709551615"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: toml::Table = fs::read_to_string(out.join("run_manifest.toml")).unwrap().parse().unwrap();
    let run = m["run"].as_table().unwrap();
    assert_eq!(run["command"].as_str(), Some("simulate-arrivals"));
    assert_eq!(run["seed"].as_str(), Some("18446744073709551615"));
    assert_eq!(run["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    assert!(run.contains_key("timestamp_unix"));
    assert_eq!(m["config"]["arrivals"]["runs"].as_integer(), Some(2000));
    assert!(m["config"].get("preset").is_none());
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = cbm(&["simulate-arrivals", "--config", cfg.to_str().unwrap(), "--deterministic", "--threads", threads], &out);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.iter().map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap())).collect::<Vec<_>>()
    };
    let a = run("a", "1");
    let b = run("b", "4");
    assert_eq!(a.len(), 3);
    assert!(a == b);
}

#[test]
fn single_cell_grid_passes_through() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "preset = \"paper_deterministic\"\n[policy]\ninspection_periods = [5.0]\npreventive_thresholds = [6.0]\n[simulation]\nn_cycles = 300\n",
    );
    let out = dir.path().join("out");
    let o = cbm(&["optimize", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let opt = fs::read_to_string(out.join("optimum.csv")).unwrap();
    let row: Vec<&str> = opt.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[0], row[1]), ("5", "6"));
    assert_eq!(fs::read_to_string(out.join("surface.csv")).unwrap().lines().count(), 2);
}

#[test]
fn gnuplot_scripts_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[output]\ngnuplot = true\n"));
    let out = dir.path().join("out");
    let o = cbm(&["simulate-arrivals", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let gp = fs::read_to_string(out.join("arrival_check.gp")).unwrap();
    assert!(gp.contains("arrival_check.csv"));
}

#[test]
fn cost_sweep_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "preset = \"paper_deterministic\"\n[sensitivity]\naxis = \"costs\"\nfirst = [150.0, 200.0]\nsecond = [80.0, 100.0]\nn_cycles = 300\n",
    );
    let out = dir.path().join("out");
    let o = cbm(&["sensitivity", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("sensitivity.csv")).unwrap().lines().count(), 5);
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbm(&["fit", "--threads", "0"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}
