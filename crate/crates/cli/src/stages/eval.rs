use std::path::{Path, PathBuf};

use vsm_actr::dataset::{read_csv, read_jsonl, ExportFormat};
use vsm_actr::linalg::Matrix;
use vsm_actr::probe::{
    build_report, chance_baseline, fit_probe, Baseline, ModelResult, ProbeOptions, RowKind,
};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::manifest::write_manifest;
use crate::stages::dataset::dataset_file;
use crate::stages::{create, open, write_text, METRICS, REPORT_JSON, REPORT_TEXT};

/// Cross-validates the probe on the full dataset and writes the report
/// (text and JSON) and per-fold metrics.
pub fn eval(root: &Path, cfg: &PipelineConfig) -> Result<()> {
    let format = cfg.dataset.format;
    let rel = dataset_file(format);
    let reader = open(root, &rel)?;
    let records = match format {
        ExportFormat::Jsonl => read_jsonl(reader),
        ExportFormat::Csv => read_csv(reader),
    }
    .map_err(|e| CliError::Other(format!("{rel}: {e}")))?;
    if records.is_empty() {
        return Err(CliError::Other(format!("{rel} has no records")));
    }
    let dim = records[0].features.as_ref().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(records.len() * dim);
    for r in &records {
        let f = r.features.as_deref().unwrap_or(&[]);
        if f.len() != dim {
            return Err(CliError::Other(format!("{rel}: records have different feature lengths")));
        }
        data.extend_from_slice(f);
    }
    let features = Matrix::from_vec(records.len(), dim, data).map_err(CliError::other)?;
    let targets: Vec<u8> = records.iter().map(|r| r.target).collect();
    let classes = cfg.mode.classes();

    let options = ProbeOptions {
        l2_lambda: cfg.probe.l2_lambda,
        folds: cfg.probe.folds,
        seed: cfg.seed(),
        tolerance: cfg.probe.tolerance,
        max_iterations: cfg.probe.max_iterations,
    };
    let probe_err = |e| CliError::Other(format!("eval: {e}"));
    let cv = fit_probe(&features, &targets, classes, &options).map_err(probe_err)?;
    let name = format!("{} probe", cfg.mode);
    let baselines = [
        chance_baseline(&targets, classes).map_err(probe_err)?,
        Baseline::unavailable("untrained", RowKind::Untrained, classes),
    ];
    let report = build_report(&[ModelResult::from_cv(&name, &cv)], &baselines);

    let text = report.to_text();
    write_text(root, REPORT_TEXT, &text)?;
    write_text(root, REPORT_JSON, &format!("{}\n", report.to_json()))?;
    report
        .write_metrics_csv(create(root, METRICS)?)
        .map_err(|e| CliError::Other(format!("{METRICS}: {e}")))?;
    write_manifest(
        root,
        "eval",
        cfg.seed(),
        cfg,
        &[PathBuf::from(rel)],
        &[REPORT_TEXT.into(), REPORT_JSON.into(), METRICS.into()],
    )?;
    print!("{text}");
    Ok(())
}
