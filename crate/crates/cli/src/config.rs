//! Pipeline configuration, read from TOML. Every key is optional.
//!
//! ```toml
//! sets = 32
//! mode = "single"
//!
//! [batch]
//! master_seed = 0
//! runs_per_set = 4
//! trials_per_run = 16
//!
//! [batch.engine]
//! noise_s = 0.8
//!
//! [embed]
//! provider = "test"
//! dim = 32
//!
//! [reduce]
//! threshold = 0.7
//!
//! [dataset]
//! features = "prompt"
//! format = "jsonl"
//! test_fraction = 0.2
//!
//! [probe]
//! l2_lambda = 1.0
//! folds = 10
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use vsm_actr::codec::TargetMode;
use vsm_actr::dataset::ExportFormat;
use vsm_actr::task::BatchConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    /// `test` or `bridge:<endpoint>`.
    pub provider: String,
    /// Vector length of the built-in test embedder.
    pub dim: usize,
    pub test_seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            provider: "test".into(),
            dim: 32,
            test_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceConfig {
    /// Share of variance the kept components must explain.
    pub threshold: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig { threshold: 0.70 }
    }
}

/// Which feature vectors go into dataset records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    None,
    Prompt,
    Holistic,
    Both,
}

impl std::str::FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(FeatureSet::None),
            "prompt" => Ok(FeatureSet::Prompt),
            "holistic" => Ok(FeatureSet::Holistic),
            "both" => Ok(FeatureSet::Both),
            other => Err(format!("unknown feature set `{other}` (expected none, prompt, holistic or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub features: FeatureSet,
    pub format: ExportFormat,
    pub test_fraction: f64,
    /// Scale the prompt and holistic parts to unit length before joining them.
    pub normalize_parts: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            features: FeatureSet::Prompt,
            format: ExportFormat::Jsonl,
            test_fraction: 0.2,
            normalize_parts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub l2_lambda: f64,
    pub folds: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            l2_lambda: 1.0,
            folds: 10,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Number of generated problem sets; set 0 is the base instance.
    pub sets: usize,
    pub mode: TargetMode,
    pub batch: BatchConfig,
    pub embed: EmbedConfig,
    pub reduce: ReduceConfig,
    pub dataset: DatasetConfig,
    pub probe: ProbeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sets: 32,
            mode: TargetMode::Single,
            batch: BatchConfig::default(),
            embed: EmbedConfig::default(),
            reduce: ReduceConfig::default(),
            dataset: DatasetConfig::default(),
            probe: ProbeConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn seed(&self) -> u64 {
        self.batch.master_seed
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.sets == 0 {
            return bad("sets must be at least 1".into());
        }
        if self.batch.runs_per_set == 0 || self.batch.trials_per_run == 0 {
            return bad("runs_per_set and trials_per_run must be at least 1".into());
        }
        self.batch.engine.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.embed.dim == 0 {
            return bad("embed.dim must be positive".into());
        }
        if !(self.reduce.threshold > 0.0 && self.reduce.threshold <= 1.0) {
            return bad(format!("reduce.threshold {} outside (0, 1]", self.reduce.threshold));
        }
        if !(self.dataset.test_fraction > 0.0 && self.dataset.test_fraction < 1.0) {
            return bad(format!("dataset.test_fraction {} outside (0, 1)", self.dataset.test_fraction));
        }
        if self.probe.folds < 2 {
            return bad("probe.folds must be at least 2".into());
        }
        if !(self.probe.l2_lambda > 0.0 && self.probe.l2_lambda.is_finite()) {
            return bad("probe.l2_lambda must be positive".into());
        }
        Ok(())
    }
}
