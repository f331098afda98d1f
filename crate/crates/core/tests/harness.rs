use std::fs;
use std::path::Path;

use linrec_core::harness::{
    self, Experiment, ExperimentConfig, HarnessError, OutputDir, EXIT_ASSERTION,
};
use serde::Serialize;

fn small(e: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(e);
    cfg.recipe.vectors = 3;
    cfg.recipe.trace_horizon = 300;
    cfg.recipe.scan_cap = 2000;
    cfg.recipe.exclusion_blocks = vec![2, 3, 4];
    cfg.recipe.cyclic_trials = 24;
    cfg.recipe.real_cyclic_vectors = 10;
    cfg.recipe.oracle_vectors = 5;
    cfg
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn every_recipe_passes_at_small_size() {
    let tmp = tempfile::tempdir().unwrap();
    for e in Experiment::ALL {
        let report = harness::run(&small(e), tmp.path()).unwrap();
        let failed: Vec<_> = report.failed().map(|a| a.id.clone()).collect();
        assert!(report.passed, "{e}: {failed:?}");
        assert!(!report.assertions.is_empty());
        for f in &report.files {
            assert!(
                tmp.path().join(e.id()).join(f).is_file(),
                "{e}: missing {f}"
            );
        }
    }
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for e in [
        Experiment::Thm1Recurrence,
        Experiment::Thm2Cyclic,
        Experiment::Thm2Exclusion,
    ] {
        let mut cfg = small(e);
        cfg.seed = 11;
        harness::run(&cfg, a.path()).unwrap();
        harness::run(&cfg, b.path()).unwrap();
        assert_eq!(
            read_dir_sorted(&a.path().join(e.id())),
            read_dir_sorted(&b.path().join(e.id())),
            "{e}"
        );
    }
}

#[test]
fn parallel_matches_serial() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Thm2Exclusion);
    let serial = harness::run(&cfg, a.path()).unwrap();
    cfg.parallel = true;
    let parallel = harness::run(&cfg, b.path()).unwrap();
    assert_eq!(serial.assertions, parallel.assertions);
    assert_eq!(serial.summaries, parallel.summaries);
    for name in [
        "exclusion.csv",
        "windows_j4.csv",
        "returns_j4.csv",
        "density_j4.csv",
    ] {
        let sa = fs::read(a.path().join("thm2-exclusion").join(name)).unwrap();
        let sb = fs::read(b.path().join("thm2-exclusion").join(name)).unwrap();
        assert_eq!(sa, sb, "{name}");
    }
}

#[test]
fn seed_changes_sampled_outputs() {
    let a = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Thm1Recurrence);
    harness::run(&cfg, a.path()).unwrap();
    let first = fs::read(a.path().join("thm1-recurrence/certificates.csv")).unwrap();
    cfg.seed = 99;
    harness::run(&cfg, a.path()).unwrap();
    let second = fs::read(a.path().join("thm1-recurrence/certificates.csv")).unwrap();
    assert_ne!(first, second);
}

#[test]
fn trace_csv_schema_and_dips() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Thm1Floor);
    cfg.recipe.trace_horizon = 400;
    harness::run(&cfg, tmp.path()).unwrap();
    let text = fs::read_to_string(tmp.path().join("thm1-floor/trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,lower,upper"));
    let rows: Vec<(u64, f64, f64)> = lines
        .map(|l| {
            let mut it = l.split(',');
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| r.1 <= r.2 + 1e-15));
}

#[test]
fn empty_rows_give_header_only_csv() {
    #[derive(Serialize)]
    struct Row {
        n: u64,
        lower: f64,
        upper: f64,
    }
    let tmp = tempfile::tempdir().unwrap();
    let mut out = OutputDir::create(tmp.path().to_path_buf()).unwrap();
    out.write_csv::<Row>("trace.csv", &["n", "lower", "upper"], &[])
        .unwrap();
    assert_eq!(
        fs::read_to_string(tmp.path().join("trace.csv")).unwrap(),
        "n,lower,upper\n"
    );
    assert_eq!(out.files(), ["trace.csv"]);
}

#[test]
fn report_keys_have_stable_order() {
    let tmp = tempfile::tempdir().unwrap();
    harness::run(&small(Experiment::Thm2Periodic), tmp.path()).unwrap();
    let text = fs::read_to_string(tmp.path().join("thm2-periodic/report.json")).unwrap();
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
    assert!(pos("experiment") < pos("seed"));
    assert!(pos("seed") < pos("passed"));
    assert!(pos("assertions") < pos("summaries"));
    assert!(pos("summaries") < pos("files"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["experiment"], "thm2-periodic");
    for a in v["assertions"].as_array().unwrap() {
        assert!(!a["invariant"].as_str().unwrap().is_empty());
    }
}

#[test]
fn resolved_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(Experiment::Thm2Periodic);
    harness::run(&cfg, tmp.path()).unwrap();
    let text =
        fs::read_to_string(tmp.path().join("thm2-periodic").join(harness::CONFIG_FILE)).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
}

#[test]
fn config_rejects_unknown_keys() {
    for text in [
        "experiment = \"thm1-ap\"\ncolour = 3\n",
        "experiment = \"thm1-ap\"\n[rigidity]\nj_mx = 4\n",
        "experiment = \"thm1-ap\"\n[recipe]\nvectorz = 4\n",
        "experiment = \"thm1-ap\"\n[space]\nq = 2.0\n",
        "experiment = \"thm9\"\n",
    ] {
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)), "{text}");
        assert_eq!(err.exit_code(), 3);
    }
}

#[test]
fn config_rejects_invalid_values() {
    for text in [
        "experiment = \"thm1-ap\"\n[space]\np = 0.5\n",
        "experiment = \"thm1-ap\"\n[recipe]\neps = []\n",
        "experiment = \"thm2-exclusion\"\n[recipe]\nmargin = 1.0\n",
    ] {
        assert!(
            matches!(
                ExperimentConfig::from_toml(text),
                Err(HarnessError::Config(_))
            ),
            "{text}"
        );
    }
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = ExperimentConfig::from_toml("experiment = \"facts-suite\"\n").unwrap();
    assert_eq!(cfg, ExperimentConfig::new(Experiment::FactsSuite));
    let cfg =
        ExperimentConfig::from_toml("experiment = \"thm1-floor\"\nseed = 5\n[space]\nK = 2.0\n")
            .unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.space.k, 2.0);
    assert_eq!(cfg.space.p, 2.0);
}

#[test]
fn exclusion_block_out_of_range_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Thm2Exclusion);
    cfg.recipe.exclusion_blocks = vec![3, 40];
    assert!(matches!(
        harness::run(&cfg, tmp.path()),
        Err(HarnessError::Config(_))
    ));
}

#[test]
fn failing_assertion_is_reported_and_named() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Thm1Floor);
    cfg.recipe.floor_slack = -1.0;
    let report = harness::run(&cfg, tmp.path()).unwrap();
    assert!(!report.passed);
    assert_eq!(report.exit_code(), EXIT_ASSERTION);
    let failed: Vec<_> = report.failed().map(|a| a.id.as_str()).collect();
    assert_eq!(failed, ["floor-above-bound"]);
}

#[test]
fn output_dir_precedence() {
    let mut cfg = small(Experiment::Thm1Ap);
    let cli = Path::new("cli-dir");
    assert_eq!(harness::resolve_output_dir(Some(cli), Some(&cfg)), cli);
    cfg.output_dir = Some("cfg-dir".into());
    assert_eq!(
        harness::resolve_output_dir(None, Some(&cfg)),
        Path::new("cfg-dir")
    );
    assert_eq!(harness::resolve_output_dir(Some(cli), Some(&cfg)), cli);
}

#[test]
fn io_errors_carry_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = harness::run(&small(Experiment::Thm2Periodic), &blocker).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("file"), "{err}");
}
