use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use trollfarm::cli::{run, Command};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap()).collect()
}

#[test]
fn cheap_commands_match_goldens() {
    for (command, file) in [
        (Command::Strategy, "strategy.csv"),
        (Command::Shares, "shares.csv"),
        (Command::Twosided, "twosided.csv"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run(command, &shipped("baseline.toml"), &[], Some(dir.path())).unwrap();
        assert!(outcome.passed);
        let written = fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(written, golden(file), "{file} drifted");
    }
}

#[test]
fn summary_has_sorted_top_level_keys() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::Shares, &shipped("baseline.toml"), &[], Some(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["command", "config", "passed", "result", "version"]);
    assert_eq!(value["version"], "v0.1.0");
    assert!(dir.path().join("timing.json").exists());
}

#[test]
fn trolls_raise_the_bad_state_share() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::Shares, &shipped("baseline.toml"), &[], Some(dir.path())).unwrap();
    let table = rows(&dir.path().join("shares.csv"));
    for row in &table {
        let off: f64 = row[1].parse().unwrap();
        let on: f64 = row[2].parse().unwrap();
        assert!(on >= off - 1e-12, "state {}: {on} < {off}", &row[0]);
    }
    let v0_on: f64 = table[0][2].parse().unwrap();
    let v0_off: f64 = table[0][1].parse().unwrap();
    assert!(v0_on > v0_off + 0.1);
}

#[test]
fn troll_mass_peaks_next_to_one_half() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::Strategy, &shipped("baseline.toml"), &[], Some(dir.path())).unwrap();
    let table = rows(&dir.path().join("strategy.csv"));
    let (peak, _) = table
        .iter()
        .map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((peak - 0.5).abs() <= 0.05 + 1e-12, "peak at {peak}");
}

#[test]
fn overrides_reach_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let set = ["electorate.mean=0.3".to_string(), "signal.mu=2.0".to_string()];
    run(Command::Twosided, &shipped("baseline.toml"), &set, Some(dir.path())).unwrap();
    let table = rows(&dir.path().join("twosided.csv"));
    assert_eq!(&table[0][1], "WINS_BOTH");
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let err = run(
        Command::Shares,
        &shipped("baseline.toml"),
        &["electorate.sd=-1".to_string()],
        Some(dir.path()),
    )
    .unwrap_err();
    assert!(err.to_string().contains("electorate"), "{err}");

    let err = run(Command::Shares, &shipped("baseline.toml"), &["verify.bogus=1".to_string()], Some(dir.path()))
        .unwrap_err();
    assert!(err.to_string().contains("verify.bogus"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_trollfarm-eq");
    let dir = tempfile::tempdir().unwrap();
    let ok = Process::new(bin)
        .args(["twosided", "--config"])
        .arg(shipped("baseline.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let bad = Process::new(bin)
        .args(["shares", "--config"])
        .arg(shipped("baseline.toml"))
        .args(["--set", "signal.mu=-3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("signal"));

    let missing = Process::new(bin).args(["shares", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn polarized_config_reports_missing_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let err = run(Command::Regimes, &shipped("regimes_polarized.toml"), &[], Some(dir.path())).unwrap_err();
    assert!(err.to_string().contains("bracket"), "{err}");
}
