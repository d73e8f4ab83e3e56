//! Experiment configuration, loadable from JSON or TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::federated::TrainConfig;
use crate::optimizer::OptimizerConfig;
use crate::topology::TopologyConfig;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Sweep the per-device cost over a (SINR, theta) grid.
    CostSurface,
    /// Compare the alternating optimizer against the random baselines.
    OptimizerConvergence,
    /// Train DDFL at several sub-global iteration counts against
    /// traditional FL on an IDX dataset.
    DdflVsFl,
}

/// Paths to an IDX image/label file pair for training and test sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl DataConfig {
    /// Resolves relative paths against the config file's directory.
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.train_images,
            &mut self.train_labels,
            &mut self.test_images,
            &mut self.test_labels,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    fn paths(&self) -> [&Path; 4] {
        [
            &self.train_images,
            &self.train_labels,
            &self.test_images,
            &self.test_labels,
        ]
    }
}

fn default_n_runs() -> usize {
    50
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_s_values() -> Vec<usize> {
    vec![1, 2, 4, 8]
}

fn default_shard_size() -> usize {
    300
}

/// One experiment, fully specified. Unknown keys are rejected so a typo
/// cannot silently fall back to a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// IDX dataset paths; required by the ddfl_vs_fl experiment.
    #[serde(default)]
    pub data: Option<DataConfig>,
    /// Sub-global iteration counts swept by ddfl_vs_fl; each must divide the
    /// training budget T = local_iters * subglobal_iters.
    #[serde(default = "default_s_values")]
    pub s_values: Vec<usize>,
    /// Samples per shard of the non-IID partition.
    #[serde(default = "default_shard_size")]
    pub shard_size: usize,
}

impl ExperimentConfig {
    /// Parses a config file, dispatching on the `.json` / `.toml` extension,
    /// and validates it. Relative dataset paths resolve against the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let mut cfg: ExperimentConfig = match ext {
            "json" => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            "toml" => toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            other => {
                return Err(Error::Config(format!(
                    "unsupported config extension {other:?}, use .json or .toml"
                )))
            }
        };
        if let (Some(data), Some(base)) = (cfg.data.as_mut(), path.parent()) {
            data.resolve(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs < 1 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        self.topology.validate()?;
        self.optimizer.validate()?;
        self.train.validate()?;
        if self.experiment == ExperimentKind::DdflVsFl {
            let Some(data) = &self.data else {
                return Err(Error::Config(
                    "ddfl_vs_fl requires a [data] section with IDX paths".into(),
                ));
            };
            for p in data.paths() {
                if !p.is_file() {
                    return Err(Error::Config(format!(
                        "dataset file does not exist: {}",
                        p.display()
                    )));
                }
            }
            if self.s_values.is_empty() {
                return Err(Error::Config("s_values must not be empty".into()));
            }
            let budget = self.train.budget();
            for &s in &self.s_values {
                if s == 0 || !budget.is_multiple_of(s) {
                    return Err(Error::Config(format!(
                        "s_values entry {s} must divide the training budget T={budget}"
                    )));
                }
            }
            if self.shard_size == 0 {
                return Err(Error::Config("shard_size must be at least 1".into()));
            }
        }
        Ok(())
    }
}
