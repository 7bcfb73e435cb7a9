use std::path::{Path, PathBuf};

use vsm_actr::features::{flatten_and_concat, pad_and_impute, sree_component_count, MatrixFile, PcaModel};
use vsm_actr::linalg::Matrix;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::manifest::write_manifest;
use crate::stages::{load_index, load_matrix, save_matrix, HOLISTIC, LINE_EMBEDDINGS, REDUCED, TRACE_INDEX};

/// PCA over all trace-line embeddings, keeping the fewest components that
/// reach the variance threshold. Also writes one holistic vector per trial:
/// the trial's reduced lines, padded to the longest trial and flattened.
pub fn reduce(root: &Path, cfg: &PipelineConfig) -> Result<()> {
    let index = load_index(root)?;
    let lines = load_matrix(root, LINE_EMBEDDINGS)?;
    let total: usize = index.iter().map(|r| r.lines).sum();
    if total != lines.matrix.rows() {
        return Err(CliError::Other(format!(
            "{LINE_EMBEDDINGS} has {} rows but {TRACE_INDEX} lists {total} lines; rerun embed",
            lines.matrix.rows()
        )));
    }
    let feature = |e| CliError::Other(format!("reduce: {e}"));
    let model = PcaModel::fit(&lines.matrix).map_err(feature)?;
    let n = sree_component_count(&model.eigenvalues, cfg.reduce.threshold).map_err(feature)?;
    let reduced = model.project(&lines.matrix, n).map_err(feature)?;
    let explained: f64 = reduced.explained_variance_ratio.iter().sum();
    save_matrix(
        root,
        REDUCED,
        &reduced.to_file().with("threshold", format!("{:?}", cfg.reduce.threshold)),
    )?;

    let mut per_trial = Vec::with_capacity(index.len());
    let mut offset = 0;
    for row in &index {
        let data = reduced.scores.as_slice()[offset * n..(offset + row.lines) * n].to_vec();
        per_trial.push(Matrix::from_vec(row.lines, n, data).map_err(CliError::other)?);
        offset += row.lines;
    }
    let padded = pad_and_impute(&per_trial).map_err(feature)?;
    let longest = padded.matrices.first().map_or(0, Matrix::rows);
    let rows: Vec<Vec<f64>> = padded.matrices.iter().map(|m| flatten_and_concat(m, &[], false)).collect();
    let holistic = Matrix::from_rows(&rows).map_err(CliError::other)?;
    save_matrix(
        root,
        HOLISTIC,
        &MatrixFile::new(holistic)
            .with("components", n.to_string())
            .with("rows_per_trial", longest.to_string()),
    )?;

    write_manifest(
        root,
        "reduce",
        cfg.seed(),
        cfg,
        &[PathBuf::from(TRACE_INDEX), PathBuf::from(LINE_EMBEDDINGS)],
        &[PathBuf::from(REDUCED), PathBuf::from(HOLISTIC)],
    )?;
    println!(
        "kept {n} of {} components ({:.1}% of variance); holistic vectors have {} values",
        lines.matrix.cols(),
        explained * 100.0,
        longest * n
    );
    Ok(())
}
