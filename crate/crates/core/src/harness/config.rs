use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::blockshift::BlockConfig;
use crate::rigidity::{RigidityConfig, DEFAULT_SCAN_CAP};
use crate::seqspace::SpaceConfig;

/// Environment variable consulted when neither the command line nor the config names an output directory.
pub const OUT_ENV: &str = "LINREC_OUT";

pub const DEFAULT_OUT: &str = "linrec-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Thm1Recurrence,
    Thm1Floor,
    Thm1Ap,
    Thm2Exclusion,
    Thm2Periodic,
    Thm2Cyclic,
    Thm2Real,
    FactsSuite,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::Thm1Recurrence,
        Self::Thm1Floor,
        Self::Thm1Ap,
        Self::Thm2Exclusion,
        Self::Thm2Periodic,
        Self::Thm2Cyclic,
        Self::Thm2Real,
        Self::FactsSuite,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Thm1Recurrence => "thm1-recurrence",
            Self::Thm1Floor => "thm1-floor",
            Self::Thm1Ap => "thm1-ap",
            Self::Thm2Exclusion => "thm2-exclusion",
            Self::Thm2Periodic => "thm2-periodic",
            Self::Thm2Cyclic => "thm2-cyclic",
            Self::Thm2Real => "thm2-real",
            Self::FactsSuite => "facts-suite",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment {s:?}")))
    }
}

/// Recipe-level knobs. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecipeParams {
    /// Number of random vectors drawn by the sampling recipes.
    pub vectors: usize,
    /// Radii tried by the recurrence certificate.
    pub eps: Vec<f64>,
    /// Length of the orbit-distance trace written to CSV.
    pub trace_horizon: u64,
    pub ap_length: u64,
    pub ap_eps: f64,
    /// Leading times checked one by one before switching to segment bounds.
    pub scan_cap: u64,
    /// Perturbation size for the `P^{-1}({z})` vectors.
    pub perturbation: f64,
    pub floor_slack: f64,
    pub exclusion_blocks: Vec<usize>,
    pub margin: f64,
    pub cyclic_trials: usize,
    pub cyclic_max_dim: usize,
    pub conjugacy_blocks: usize,
    pub real_cyclic_blocks: usize,
    pub real_cyclic_vectors: usize,
    /// Random vectors in the closed-form oracle sweep.
    pub oracle_vectors: usize,
}

impl Default for RecipeParams {
    fn default() -> Self {
        Self {
            vectors: 10,
            eps: vec![1e-2, 1e-4],
            trace_horizon: 4096,
            ap_length: 5,
            ap_eps: 1e-3,
            scan_cap: DEFAULT_SCAN_CAP,
            perturbation: 1e-3,
            floor_slack: 0.02,
            exclusion_blocks: vec![4, 5, 6, 7, 8],
            margin: 2.0,
            cyclic_trials: 200,
            cyclic_max_dim: 8,
            conjugacy_blocks: 6,
            real_cyclic_blocks: 3,
            real_cyclic_vectors: 50,
            oracle_vectors: 200,
        }
    }
}

/// Contents of a run configuration file (TOML).
///
/// ```toml
/// experiment = "thm1-floor"
/// seed = 7
///
/// [space]
/// p = 2.0
/// K = 1.0
///
/// [rigidity]
/// j_max = 12
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub rigidity: RigidityConfig,
    #[serde(default)]
    pub blockshift: BlockConfig,
    #[serde(default)]
    pub recipe: RecipeParams,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            output_dir: None,
            parallel: false,
            space: SpaceConfig::default(),
            rigidity: RigidityConfig::default(),
            blockshift: BlockConfig::default(),
            recipe: RecipeParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let config = |e: crate::error::Error| HarnessError::Config(e.to_string());
        self.space.validate().map_err(config)?;
        self.rigidity.validate().map_err(config)?;
        let r = &self.recipe;
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if r.eps.is_empty() || r.eps.iter().any(|e| !(*e > 0.0)) {
            return bad("recipe.eps must be a non-empty list of positive radii");
        }
        if r.ap_length == 0 || !(r.ap_eps > 0.0) {
            return bad("recipe.ap_length and recipe.ap_eps must be positive");
        }
        if r.vectors == 0 || r.cyclic_trials == 0 {
            return bad("recipe.vectors and recipe.cyclic_trials must be positive");
        }
        if r.cyclic_max_dim == 0 || r.cyclic_max_dim > 64 {
            return bad("recipe.cyclic_max_dim must lie in 1..=64");
        }
        if r.margin <= 1.0 {
            return bad("recipe.margin must exceed 1");
        }
        if r.exclusion_blocks.is_empty() {
            return bad("recipe.exclusion_blocks must not be empty");
        }
        Ok(())
    }

    /// Canonical TOML with every default filled in.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `--out`, then the config, then `LINREC_OUT`, then [`DEFAULT_OUT`].
pub fn resolve_output_dir(cli: Option<&Path>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}
