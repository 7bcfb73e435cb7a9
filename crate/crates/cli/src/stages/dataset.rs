use std::path::{Path, PathBuf};

use vsm_actr::dataset::{
    build_dataset as assemble, parse_run_id, split, write_csv, write_jsonl, DatasetRecord, ExportFormat,
    FinetuneConfig,
};
use vsm_actr::features::flatten_and_concat;
use vsm_actr::linalg::Matrix;
use vsm_actr::task::DecisionOutcome;

use crate::config::{FeatureSet, PipelineConfig};
use crate::error::{CliError, Result};
use crate::manifest::write_manifest;
use crate::stages::{
    check_index_matches, create, load_index, load_matrix, load_outcomes, load_problem_sets, write_text, FINETUNE,
    HOLISTIC, OUTCOMES, PROBLEM_SETS, PROMPT_EMBEDDINGS, SIZING, TRACE_INDEX,
};

pub fn dataset_file(format: ExportFormat) -> String {
    format!("dataset.{}", format.extension())
}

fn export(root: &Path, rel: &str, records: &[DatasetRecord], format: ExportFormat) -> Result<()> {
    let w = create(root, rel)?;
    match format {
        ExportFormat::Jsonl => write_jsonl(w, records),
        ExportFormat::Csv => write_csv(w, records),
    }
    .map_err(|e| CliError::Other(format!("{rel}: {e}")))
}

fn prompt_features(root: &Path, cfg: &PipelineConfig, outcomes: &[DecisionOutcome]) -> Result<Vec<Vec<f64>>> {
    let file = load_matrix(root, PROMPT_EMBEDDINGS)?;
    let mode = cfg.mode.to_string();
    if file.get("mode") != Some(mode.as_str()) {
        return Err(CliError::Config(format!(
            "{PROMPT_EMBEDDINGS} holds {} prompts but the dataset mode is {mode}; rerun embed --mode {mode}",
            file.get("mode").unwrap_or("unknown")
        )));
    }
    outcomes
        .iter()
        .map(|o| {
            parse_run_id(&o.run_id)
                .map(|(set, _)| set)
                .filter(|&set| set < file.matrix.rows())
                .map(|set| file.matrix.row(set).to_vec())
                .ok_or_else(|| CliError::Other(format!("no prompt embedding for run {}", o.run_id)))
        })
        .collect()
}

fn holistic_features(root: &Path, outcomes: &[DecisionOutcome]) -> Result<Vec<Vec<f64>>> {
    check_index_matches(&load_index(root)?, outcomes)?;
    let file = load_matrix(root, HOLISTIC)?;
    if file.matrix.rows() != outcomes.len() {
        return Err(CliError::Other(format!(
            "{HOLISTIC} has {} rows for {} outcomes; rerun reduce",
            file.matrix.rows(),
            outcomes.len()
        )));
    }
    Ok(file.matrix.row_iter().map(<[f64]>::to_vec).collect())
}

/// Pairs outcomes with prompts and features, then writes the full dataset,
/// a stratified train/test split, the sizing report and the fine-tuning
/// configuration.
pub fn build_dataset(root: &Path, cfg: &PipelineConfig) -> Result<()> {
    let outcomes = load_outcomes(root)?;
    let sets = load_problem_sets(root)?;
    let mut inputs = vec![PathBuf::from(OUTCOMES), PathBuf::from(PROBLEM_SETS)];
    let features = match cfg.dataset.features {
        FeatureSet::None => None,
        FeatureSet::Prompt => {
            inputs.push(PROMPT_EMBEDDINGS.into());
            Some(prompt_features(root, cfg, &outcomes)?)
        }
        FeatureSet::Holistic => {
            inputs.extend([PathBuf::from(TRACE_INDEX), PathBuf::from(HOLISTIC)]);
            Some(holistic_features(root, &outcomes)?)
        }
        FeatureSet::Both => {
            inputs.extend([PathBuf::from(PROMPT_EMBEDDINGS), PathBuf::from(TRACE_INDEX), PathBuf::from(HOLISTIC)]);
            let prompt = prompt_features(root, cfg, &outcomes)?;
            let holistic = holistic_features(root, &outcomes)?;
            let joined = holistic
                .into_iter()
                .zip(prompt)
                .map(|(h, p)| {
                    let m = Matrix::from_vec(1, h.len(), h).expect("one row");
                    flatten_and_concat(&m, &p, cfg.dataset.normalize_parts)
                })
                .collect();
            Some(joined)
        }
    };
    let built = assemble(&outcomes, &sets, cfg.mode, cfg.mode, features.as_deref())
        .map_err(|e| CliError::Other(format!("build-dataset: {e}")))?;
    let (train, test) = split(&built.records, cfg.dataset.test_fraction, cfg.seed())
        .map_err(|e| CliError::Other(format!("split: {e}")))?;

    let format = cfg.dataset.format;
    let ext = format.extension();
    let all = dataset_file(format);
    let train_rel = format!("train.{ext}");
    let test_rel = format!("test.{ext}");
    export(root, &all, &built.records, format)?;
    export(root, &train_rel, &train, format)?;
    export(root, &test_rel, &test, format)?;
    write_text(root, SIZING, &format!("{}\n", built.sizing))?;
    write_text(root, FINETUNE, &FinetuneConfig::default().to_string())?;

    write_manifest(
        root,
        "build-dataset",
        cfg.seed(),
        cfg,
        &inputs,
        &[all.into(), train_rel.into(), test_rel.into(), SIZING.into(), FINETUNE.into()],
    )?;
    println!("{}", built.sizing);
    println!("split {} train / {} test", train.len(), test.len());
    Ok(())
}
