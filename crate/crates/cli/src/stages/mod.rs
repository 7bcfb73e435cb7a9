//! Pipeline stages and the files they share.

mod analyze;
mod dataset;
mod embed;
mod eval;
mod reduce;
mod simulate;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vsm_actr::features::MatrixFile;
use vsm_actr::task::{read_outcomes, read_problem_sets, DecisionOutcome, ProblemInstance, TaskError};

use crate::error::{CliError, Result};

pub use analyze::analyze;
pub use dataset::build_dataset;
pub use embed::embed;
pub use eval::eval;
pub use reduce::reduce;
pub use simulate::{distill, simulate};

pub const PROBLEM_SETS: &str = "problem_sets.csv";
pub const OUTCOMES: &str = "outcomes.csv";
pub const TRACE_DIR: &str = "traces";
pub const TRACE_INDEX: &str = "traces/index.csv";
pub const SELECTED: &str = "selected.csv";
pub const EMBED_DIR: &str = "embeddings";
pub const LINE_EMBEDDINGS: &str = "embeddings/trace_lines.matrix";
pub const PROMPT_EMBEDDINGS: &str = "embeddings/prompts.matrix";
pub const REDUCED: &str = "embeddings/reduced.matrix";
pub const HOLISTIC: &str = "embeddings/holistic.matrix";
pub const SIZING: &str = "sizing.txt";
pub const FINETUNE: &str = "finetune.cfg";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const METRICS: &str = "metrics.csv";
pub const PROGRESSION_TEXT: &str = "progression.txt";
pub const PROGRESSION_JSON: &str = "progression.json";

/// Location of one trial's lines inside `traces/<run_id>.txt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceIndexRow {
    pub run_id: String,
    pub trial: usize,
    pub first_line: usize,
    pub lines: usize,
}

pub fn trace_file(run_id: &str) -> PathBuf {
    Path::new(TRACE_DIR).join(format!("{run_id}.txt"))
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Fails with the upstream-artifact error when `rel` does not exist.
pub(crate) fn require(root: &Path, rel: &str) -> Result<PathBuf> {
    let path = root.join(rel);
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Missing(path))
    }
}

pub(crate) fn open(root: &Path, rel: &str) -> Result<BufReader<File>> {
    let path = require(root, rel)?;
    Ok(BufReader::new(File::open(&path).map_err(io_err(&path))?))
}

pub(crate) fn create(root: &Path, rel: &str) -> Result<BufWriter<File>> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(&path).map_err(io_err(&path))?))
}

pub(crate) fn write_text(root: &Path, rel: &str, text: &str) -> Result<()> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&path, text).map_err(io_err(&path))
}

fn task_err(e: TaskError) -> CliError {
    match e {
        TaskError::Io(e) => CliError::other(e),
        TaskError::Csv(e) => CliError::other(e),
        other => CliError::Engine(other.to_string()),
    }
}

pub(crate) fn load_outcomes(root: &Path) -> Result<Vec<DecisionOutcome>> {
    read_outcomes(open(root, OUTCOMES)?).map_err(|e| CliError::Other(format!("{OUTCOMES}: {e}")))
}

pub(crate) fn load_problem_sets(root: &Path) -> Result<Vec<ProblemInstance>> {
    read_problem_sets(open(root, PROBLEM_SETS)?).map_err(|e| CliError::Other(format!("{PROBLEM_SETS}: {e}")))
}

pub(crate) fn load_index(root: &Path) -> Result<Vec<TraceIndexRow>> {
    let mut rdr = csv::Reader::from_reader(open(root, TRACE_INDEX)?);
    rdr.deserialize()
        .collect::<std::result::Result<Vec<TraceIndexRow>, _>>()
        .map_err(|e| CliError::Other(format!("{TRACE_INDEX}: {e}")))
}

pub(crate) fn load_matrix(root: &Path, rel: &str) -> Result<MatrixFile> {
    MatrixFile::read(open(root, rel)?).map_err(|e| CliError::Other(format!("{rel}: {e}")))
}

pub(crate) fn save_matrix(root: &Path, rel: &str, file: &MatrixFile) -> Result<()> {
    file.write(create(root, rel)?).map_err(|e| CliError::Other(format!("{rel}: {e}")))
}

/// Checks that the trace index lists exactly the outcomes, in order.
pub(crate) fn check_index_matches(index: &[TraceIndexRow], outcomes: &[DecisionOutcome]) -> Result<()> {
    let aligned = index.len() == outcomes.len()
        && index.iter().zip(outcomes).all(|(i, o)| i.run_id == o.run_id && i.trial == o.trial);
    if aligned {
        Ok(())
    } else {
        Err(CliError::Other(format!(
            "{TRACE_INDEX} does not line up with {OUTCOMES}; rerun simulate"
        )))
    }
}
