//! The `vsm-actr` command line. Each subcommand is one pipeline stage that
//! reads the previous stage's files from the working directory (`--out`) and
//! writes its own, plus a `manifest-<stage>.json`.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use vsm_actr::codec::TargetMode;
use vsm_actr::dataset::ExportFormat;

use crate::config::{FeatureSet, PipelineConfig};
pub use crate::error::{CliError, Result};

/// Environment variable that replaces the endpoint of a `bridge` provider.
pub const BRIDGE_ENV: &str = "VSM_ACTR_BRIDGE";

#[derive(Debug, Parser)]
#[command(name = "vsm-actr", version, about = "Decision-model simulator and dataset pipeline")]
pub struct Cli {
    /// Pipeline directory: inputs are read from and outputs written to it.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `batch.master_seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the batch simulation and write outcomes and traces.
    Simulate {
        #[arg(long)]
        sets: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Turn outcomes into section or compound targets.
    Distill {
        #[arg(long)]
        mode: Option<TargetMode>,
    },
    /// Embed trace lines and prompts.
    Embed {
        /// `test` or `bridge:<endpoint>`.
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        mode: Option<TargetMode>,
    },
    /// Reduce trace-line embeddings with PCA.
    Reduce {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Assemble, split and export the dataset.
    BuildDataset {
        #[arg(long)]
        mode: Option<TargetMode>,
        #[arg(long)]
        features: Option<FeatureSet>,
        #[arg(long)]
        format: Option<ExportFormat>,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Cross-validate a probe on the dataset and compare with baselines.
    Eval {
        #[arg(long)]
        mode: Option<TargetMode>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        format: Option<ExportFormat>,
    },
    /// Strategy progression statistics over trials.
    Analyze,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Loads the config file and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    set(&mut cfg.batch.master_seed, cli.seed);
    match &cli.command {
        Command::Simulate { sets, runs, trials } => {
            set(&mut cfg.sets, *sets);
            set(&mut cfg.batch.runs_per_set, *runs);
            set(&mut cfg.batch.trials_per_run, *trials);
        }
        Command::Distill { mode } => set(&mut cfg.mode, *mode),
        Command::Embed { provider, dim, mode } => {
            set(&mut cfg.embed.provider, provider.clone());
            set(&mut cfg.embed.dim, *dim);
            set(&mut cfg.mode, *mode);
        }
        Command::Reduce { threshold } => set(&mut cfg.reduce.threshold, *threshold),
        Command::BuildDataset {
            mode,
            features,
            format,
            test_fraction,
        } => {
            set(&mut cfg.mode, *mode);
            set(&mut cfg.dataset.features, *features);
            set(&mut cfg.dataset.format, *format);
            set(&mut cfg.dataset.test_fraction, *test_fraction);
        }
        Command::Eval {
            mode,
            folds,
            lambda,
            format,
        } => {
            set(&mut cfg.mode, *mode);
            set(&mut cfg.probe.folds, *folds);
            set(&mut cfg.probe.l2_lambda, *lambda);
            set(&mut cfg.dataset.format, *format);
        }
        Command::Analyze => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one stage. Progress goes to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let root = cli.out.as_path();
    std::fs::create_dir_all(root).map_err(|source| CliError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    match cli.command {
        Command::Simulate { .. } => stages::simulate(root, &cfg),
        Command::Distill { .. } => stages::distill(root, &cfg),
        Command::Embed { .. } => stages::embed(root, &cfg),
        Command::Reduce { .. } => stages::reduce(root, &cfg),
        Command::BuildDataset { .. } => stages::build_dataset(root, &cfg),
        Command::Eval { .. } => stages::eval(root, &cfg),
        Command::Analyze => stages::analyze(root, &cfg),
    }
}
