use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn linrec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linrec"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LINREC_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_PERIODIC: &str = "experiment = \"thm2-periodic\"\n[blockshift]\nj_max = 4\n";

#[test]
fn run_passes_with_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.toml", SMALL_PERIODIC);
    let out = linrec(&["run", &cfg, "--out", "res"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS exact-period"), "{stdout}");
    assert!(tmp.path().join("res/thm2-periodic/report.json").is_file());
    assert!(tmp.path().join("res/thm2-periodic/eigen.csv").is_file());
}

#[test]
fn invalid_config_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "experiment = \"thm2-periodic\"\nbogus = 1\n",
    );
    let out = linrec(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn failing_assertion_exits_two_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "f.toml",
        "experiment = \"thm1-floor\"\n[recipe]\nscan_cap = 1000\ntrace_horizon = 10\nfloor_slack = -1.0\n",
    );
    let out = linrec(&["run", &cfg, "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL floor-above-bound"));
}

#[test]
fn missing_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = linrec(&["run", "nope.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
}

#[test]
fn output_dir_from_env_then_config_then_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.toml", SMALL_PERIODIC);
    let status = Command::new(env!("CARGO_BIN_EXE_linrec"))
        .args(["run", &cfg])
        .current_dir(tmp.path())
        .env("LINREC_OUT", "from-env")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(tmp
        .path()
        .join("from-env/thm2-periodic/report.json")
        .is_file());

    let cfg2 = write_config(
        tmp.path(),
        "q.toml",
        &format!("output_dir = \"from-cfg\"\n{SMALL_PERIODIC}"),
    );
    let status = Command::new(env!("CARGO_BIN_EXE_linrec"))
        .args(["run", &cfg2])
        .current_dir(tmp.path())
        .env("LINREC_OUT", "from-env-2")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(tmp
        .path()
        .join("from-cfg/thm2-periodic/report.json")
        .is_file());
    assert!(!tmp.path().join("from-env-2").exists());

    let out = linrec(&["run", &cfg2, "--out", "from-flag"], tmp.path());
    assert!(out.status.success());
    assert!(tmp
        .path()
        .join("from-flag/thm2-periodic/report.json")
        .is_file());
}

#[test]
fn seed_flag_overrides_config_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"thm2-cyclic\"\nseed = 1\n[recipe]\ncyclic_trials = 16\n[blockshift]\nj_max = 4\n",
    );
    let out = linrec(
        &["run", &cfg, "--seed", "42", "--parallel", "--out", "res"],
        tmp.path(),
    );
    assert!(out.status.success());
    let resolved =
        fs::read_to_string(tmp.path().join("res/thm2-cyclic/config.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 42"), "{resolved}");
    assert!(resolved.contains("parallel = true"), "{resolved}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"thm2-cyclic\"\nseed = 3\n[recipe]\ncyclic_trials = 16\n[blockshift]\nj_max = 4\n",
    );
    assert!(linrec(&["run", &cfg, "--out", "a"], tmp.path())
        .status
        .success());
    assert!(linrec(&["run", &cfg, "--out", "b"], tmp.path())
        .status
        .success());
    for f in ["cyclic.csv", "report.json", "config.resolved.toml"] {
        let a = fs::read(tmp.path().join("a/thm2-cyclic").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b/thm2-cyclic").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn facts_command_runs_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = linrec(&["facts", "--out", "res"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let facts = fs::read_to_string(tmp.path().join("res/facts-suite/facts.csv")).unwrap();
    assert!(facts.starts_with("check,cases,failures,worst\n"));
    assert_eq!(facts.lines().count(), 7);
}

#[test]
fn density_command_summarizes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let set: String = std::iter::once("n".to_string())
        .chain((1..=100).filter(|n| n % 4 == 0).map(|n| n.to_string()))
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(tmp.path().join("r.csv"), set + "\n").unwrap();
    let out = linrec(&["density", "r.csv", "--horizon", "100"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("longest_ap"), "{text}");
    assert!(text.contains("25"), "{text}");

    let out = linrec(&["density", "r.csv", "--out", "d"], tmp.path());
    assert!(out.status.success());
    assert!(tmp.path().join("d/density.csv").is_file());

    fs::write(tmp.path().join("bad.csv"), "n\nseven\n").unwrap();
    let out = linrec(&["density", "bad.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = linrec_core::harness::ExperimentConfig::load(&path);
            assert!(cfg.is_ok(), "{}: {:?}", path.display(), cfg.err());
            seen += 1;
        }
    }
    assert_eq!(seen, 8);
}
