//! Fine-tuning and probe datasets.
//!
//! Outcomes from the batch driver are paired with a prompt describing their
//! problem instance and a target code, optionally with a feature vector per
//! prompt. Datasets can be split by class and exported as JSONL or CSV.

mod finetune;
mod problems;
mod prompt;
mod records;

use thiserror::Error;

pub use finetune::{emit_finetune_config, FinetuneConfig};
pub use problems::{generate_problem_sets, CT_ASM_RANGE, CT_PRE_RANGE, OEE_RANGE};
pub use prompt::{format_quantity, render_prompt};
pub use records::{
    build_dataset, export, import, parse_run_id, read_csv, read_jsonl, split, write_csv, write_jsonl, BuiltDataset,
    DatasetRecord, ExportFormat, SizingReport, ROWS_PER_CLASS,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no outcomes to build a dataset from")]
    EmptyOutcomes,
    #[error("feature source has {found} vectors for {expected} outcomes")]
    FeatureCountMismatch { expected: usize, found: usize },
    #[error("run id `{0}` does not name a known problem set")]
    UnknownRun(String),
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("class {class} has {count} member(s); at least 2 are needed to split")]
    ClassTooSmall { class: u8, count: usize },
    #[error("dataset format: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
