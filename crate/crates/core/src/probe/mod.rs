//! Behavior-prediction probes and progression statistics.
//!
//! [`fit_probe`] cross-validates an L2-regularized multinomial logistic
//! regression; [`progression_stats`] summarizes how strategy codes change
//! over trials; [`build_report`] lays results out next to baselines.

mod cv;
mod logistic;
mod progression;
mod report;

use thiserror::Error;

use crate::linalg::LinalgError;

pub use cv::{fit_probe, stratified_folds, CvResult, FoldMetrics, ProbeOptions};
pub use logistic::{
    accuracy, fit_logistic, nll, nll_of_proba, FitDiagnostics, FitOptions, LogisticObjective, ProbeModel,
};
pub use progression::{
    fit_ordered_logit, ols, progression_stats, OlsFit, OrderedLogitFit, OrderedLogitOutcome, ProgressionStats,
    SeparationDiagnostics, TrialMean,
};
pub use report::{
    build_report, chance_baseline, format_metric, Baseline, EvalReport, ModelFolds, ModelResult, ReportRow,
    RowKind, Verdict,
};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("fold {fold} is degenerate: {reason}")]
    DegenerateFold { fold: usize, reason: String },
    #[error("non-finite feature value")]
    NonFinite,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
