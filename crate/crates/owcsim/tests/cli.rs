use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use owcsim::config::{RunConfig, DEFAULT_CONFIG};

fn owcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_owcsim")).args(args).env_remove("OWCSIM_CONFIG").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().find(|l| !l.starts_with('#')).unwrap().to_string()
}

fn assert_golden(dir: &Path, file: &str) {
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(file.replace(".csv", ".header"))).unwrap();
    assert_eq!(header(&dir.join(file)), golden.trim_end(), "{file}");
}

/// Two user counts, 3 drops: enough to produce every file quickly.
fn small_config(dir: &Path) -> std::path::PathBuf {
    let text = DEFAULT_CONFIG
        .replace("n_drops = 20", "n_drops = 3")
        .replace("n_users = [1, 2, 3, 4, 5, 6, 7]", "n_users = [1, 2]")
        .replace("failure_users = [1, 2, 3]", "failure_users = [1, 2]");
    assert_ne!(text, DEFAULT_CONFIG);
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn trace_is_idempotent_and_tracks_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let first = owcsim(&["trace", "--out", out]);
    assert!(first.status.success());
    assert!(stdout(&first).starts_with("traced:"), "{}", stdout(&first));
    assert!(stdout(&first).contains("[32, 4, 8, 4]"));
    let again = owcsim(&["trace", "--out", out]);
    assert!(stdout(&again).starts_with("up to date:"));

    let changed = dir.path().join("changed.toml");
    fs::write(&changed, DEFAULT_CONFIG.replace("floor_reflectance = 0.3", "floor_reflectance = 0.4")).unwrap();
    let fresh = owcsim(&["trace", "--config", changed.to_str().unwrap(), "--out", out]);
    assert!(stdout(&fresh).starts_with("traced:"));
    assert_ne!(stdout(&fresh).split("fingerprint").nth(1), stdout(&first).split("fingerprint").nth(1));
}

#[test]
fn experiment_is_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = owcsim(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "1");
    let b = run("b", "4");
    for f in owcsim::experiment::OUTPUT_FILES {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    for f in ["drops.csv", "ap_counts.csv", "fig4.csv", "fig5.csv", "fig6.csv", "fig7.csv"] {
        assert_golden(&a, f);
        let text = fs::read_to_string(a.join(f)).unwrap();
        let fp = owcsim::config::hex(&RunConfig::load(&cfg).unwrap().fingerprint());
        assert!(text.starts_with(&format!("# fingerprint: {fp}\n")), "{f}");
    }
    let fig6 = fs::read_to_string(a.join("fig6.csv")).unwrap();
    assert_eq!(fig6.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 2);
    let fig7 = fs::read_to_string(a.join("fig7.csv")).unwrap();
    assert_eq!(fig7.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 4 * 2);

    let reseeded = dir.path().join("c");
    owcsim(&["experiment", "--config", cfg.to_str().unwrap(), "--out", reseeded.to_str().unwrap(), "--seed", "7"]);
    assert_ne!(fs::read(a.join("drops.csv")).unwrap(), fs::read(reseeded.join("drops.csv")).unwrap());
}

#[test]
fn pon_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = owcsim(&["pon", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("awgr_pon         bisection 200 Gbps"));
    assert_golden(dir.path(), "pon_comparison.csv");
    assert_golden(dir.path(), "awgr_pon.resilience.csv");
    let table = fs::read_to_string(dir.path().join("pon_comparison.csv")).unwrap();
    assert!(table.contains("\nawgr_pon,8,200,0,"));
    assert!(table.contains("\nswitch_baseline,8,80,4,"));
    let back = owcsim::ponio::import_manifest(&dir.path().join("awgr_pon.manifest.json")).unwrap();
    assert_eq!(back.bisection_bandwidth().unwrap(), 200.0);
}

#[test]
fn validate_passes() {
    let o = owcsim(&["validate", "--instances", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 mismatches"));
    assert!(stdout(&o).contains("sigma_printed 3.496658e-14"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = owcsim(&["trace", "--config", "/nonexistent/owcsim.toml"]);
    assert_eq!(missing.status.code(), Some(1));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, DEFAULT_CONFIG.replace("fov_deg = 25.0", "fov_deg = 125.0")).unwrap();
    let invalid = owcsim(&["trace", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("configuration"));
}

#[test]
fn config_path_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_owcsim"))
        .args(["validate", "--instances", "5"])
        .env("OWCSIM_CONFIG", dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_owcsim")).args(["validate", "--instances", "5"]).env("OWCSIM_CONFIG", &cfg).output().unwrap();
    assert!(o.status.success());
}
