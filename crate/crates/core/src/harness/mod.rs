//! Reproducible experiment runs: config in, report and CSV files out.
//!
//! Each run writes into `<out>/<experiment>/`: the resolved config, the recipe's
//! CSV files and `report.json`. Output is a function of config and seed only.

mod config;
mod recipes;
mod report;

use std::path::{Path, PathBuf};

pub use config::{
    resolve_output_dir, Experiment, ExperimentConfig, RecipeParams, DEFAULT_OUT, OUT_ENV,
};
pub use recipes::{
    sweep_block_power, sweep_closed_form, sweep_corner_bound, sweep_lambda_lower,
    sweep_lambda_upper, sweep_lambda_vanishing, Sweep,
};
pub use report::{Assertion, Assertions, Outcome, OutputDir, RunReport};

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numeric(#[from] Error),
}

impl HarnessError {
    /// Process exit status: 3 for bad configs, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 3,
            Self::Io { .. } | Self::Numeric(_) => 1,
        }
    }
}

/// Exit status when every assertion holds.
pub const EXIT_OK: i32 = 0;
/// Exit status when some assertion fails.
pub const EXIT_ASSERTION: i32 = 2;

pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.resolved.toml";

/// Runs the configured recipe under `out_root/<experiment>`.
pub fn run(cfg: &ExperimentConfig, out_root: &Path) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let mut out = OutputDir::create(out_root.join(cfg.experiment.id()))?;
    out.write_text(CONFIG_FILE, &cfg.resolved_toml())?;
    log::info!(
        "running {} with seed {} into {}",
        cfg.experiment,
        cfg.seed,
        out.root().display()
    );
    let outcome = match cfg.experiment {
        Experiment::Thm1Recurrence => recipes::thm1_recurrence(cfg, &mut out)?,
        Experiment::Thm1Floor => recipes::thm1_floor(cfg, &mut out)?,
        Experiment::Thm1Ap => recipes::thm1_ap(cfg, &mut out)?,
        Experiment::Thm2Exclusion => recipes::thm2_exclusion(cfg, &mut out)?,
        Experiment::Thm2Periodic => recipes::thm2_periodic(cfg, &mut out)?,
        Experiment::Thm2Cyclic => recipes::thm2_cyclic(cfg, &mut out)?,
        Experiment::Thm2Real => recipes::thm2_real(cfg, &mut out)?,
        Experiment::FactsSuite => recipes::facts_suite(cfg, &mut out)?,
    };
    let passed = outcome.assertions.all_passed();
    let mut files = out.files().to_vec();
    files.push(REPORT_FILE.to_string());
    let report = RunReport {
        experiment: cfg.experiment.id().to_string(),
        seed: cfg.seed,
        parallel: cfg.parallel,
        passed,
        assertions: outcome.assertions.into_vec(),
        summaries: outcome.summaries,
        files,
    };
    for a in report.failed() {
        log::warn!("assertion {} failed: {}", a.id, a.detail);
    }
    out.write_json(REPORT_FILE, &report)?;
    Ok(report)
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_ASSERTION
        }
    }
}
