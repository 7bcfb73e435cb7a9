use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::TargetMode;
use crate::dataset::{render_prompt, DatasetError};
use crate::task::{DecisionOutcome, ProblemInstance};

/// Recommended rows per target class.
pub const ROWS_PER_CLASS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub prompt: String,
    pub target: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    pub run_id: String,
    pub trial: usize,
}

/// Dataset size against the rows-per-class guideline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizingReport {
    pub classes: usize,
    pub target: usize,
    pub actual: usize,
}

impl SizingReport {
    pub fn new(classes: usize, actual: usize) -> Self {
        SizingReport {
            classes,
            target: classes * ROWS_PER_CLASS,
            actual,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.actual >= self.target
    }
}

impl fmt::Display for SizingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} classes × {} ⇒ target {}, actual {}: ",
            self.classes, ROWS_PER_CLASS, self.target, self.actual
        )?;
        if self.is_ok() {
            write!(f, "OK")
        } else {
            write!(f, "SHORT by {}", self.target - self.actual)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltDataset {
    pub records: Vec<DatasetRecord>,
    pub sizing: SizingReport,
}

/// `(set, run)` from an id of the form `s{set}r{run}`.
pub fn parse_run_id(id: &str) -> Option<(usize, usize)> {
    let (set, run) = id.strip_prefix('s')?.split_once('r')?;
    Some((set.parse().ok()?, run.parse().ok()?))
}

/// One record per outcome. The prompt comes from the outcome's problem set
/// (looked up through its run id), the target from `target_mode`.
/// `features`, when given, must hold one vector per outcome.
pub fn build_dataset(
    outcomes: &[DecisionOutcome],
    problem_sets: &[ProblemInstance],
    prompt_mode: TargetMode,
    target_mode: TargetMode,
    features: Option<&[Vec<f64>]>,
) -> Result<BuiltDataset, DatasetError> {
    if outcomes.is_empty() {
        return Err(DatasetError::EmptyOutcomes);
    }
    if let Some(f) = features {
        if f.len() != outcomes.len() {
            return Err(DatasetError::FeatureCountMismatch {
                expected: outcomes.len(),
                found: f.len(),
            });
        }
    }
    let mut prompts: BTreeMap<usize, String> = BTreeMap::new();
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.iter().enumerate() {
        let set = parse_run_id(&o.run_id)
            .map(|(s, _)| s)
            .filter(|&s| s < problem_sets.len())
            .ok_or_else(|| DatasetError::UnknownRun(o.run_id.clone()))?;
        let prompt = prompts
            .entry(set)
            .or_insert_with(|| render_prompt(&problem_sets[set], prompt_mode))
            .clone();
        records.push(DatasetRecord {
            prompt,
            target: target_mode.target(o),
            features: features.map(|f| f[i].clone()),
            run_id: o.run_id.clone(),
            trial: o.trial,
        });
    }
    let sizing = SizingReport::new(target_mode.classes(), records.len());
    Ok(BuiltDataset { records, sizing })
}

/// Stratified split. Each class sends `round(n * test_fraction)` members to
/// the test side, clamped so both sides keep at least one. Both halves keep
/// the input order.
pub fn split(
    dataset: &[DatasetRecord],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<DatasetRecord>, Vec<DatasetRecord>), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(test_fraction));
    }
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, r) in dataset.iter().enumerate() {
        by_class.entry(r.target).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; dataset.len()];
    for (&class, members) in &mut by_class {
        let n = members.len();
        if n < 2 {
            return Err(DatasetError::ClassTooSmall { class, count: n });
        }
        let k = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        members.shuffle(&mut rng);
        for &i in &members[..k] {
            in_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = dataset.iter().cloned().zip(in_test).partition(|(_, t)| *t);
    Ok((train.into_iter().map(|(r, _)| r).collect(), test.into_iter().map(|(r, _)| r).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Jsonl,
    Csv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Jsonl => "jsonl",
            ExportFormat::Csv => "csv",
        }
    }
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(ExportFormat::Jsonl),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(format!("unknown dataset format `{other}` (expected jsonl or csv)")),
        }
    }
}

pub fn write_jsonl<W: Write>(mut w: W, dataset: &[DatasetRecord]) -> Result<(), DatasetError> {
    for r in dataset {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

fn feature_dim(dataset: &[DatasetRecord]) -> Result<usize, DatasetError> {
    let dims: Vec<usize> = dataset.iter().map(|r| r.features.as_ref().map_or(0, Vec::len)).collect();
    match dims.first() {
        None => Ok(0),
        Some(&d) if dims.iter().all(|&x| x == d) => Ok(d),
        Some(&d) => Err(DatasetError::Format(format!(
            "records have different feature lengths ({d} and {})",
            dims.iter().find(|&&x| x != d).copied().unwrap_or(d)
        ))),
    }
}

/// Columns `prompt,target,run_id,trial,f0..f{d-1}`. Every record must have
/// the same number of features; a record without features counts as zero.
pub fn write_csv<W: Write>(w: W, dataset: &[DatasetRecord]) -> Result<(), DatasetError> {
    let dim = feature_dim(dataset)?;
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["prompt", "target", "run_id", "trial"].map(String::from).to_vec();
    header.extend((0..dim).map(|i| format!("f{i}")));
    wtr.write_record(&header)?;
    for r in dataset {
        let mut row = vec![r.prompt.clone(), r.target.to_string(), r.run_id.clone(), r.trial.to_string()];
        if let Some(f) = &r.features {
            row.extend(f.iter().map(|x| format!("{x:?}")));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let fixed = ["prompt", "target", "run_id", "trial"];
    if header.len() < fixed.len() || header.iter().zip(fixed).any(|(a, b)| a != b) {
        return Err(DatasetError::Format("unexpected CSV header".into()));
    }
    let dim = header.len() - fixed.len();
    for (i, name) in header.iter().skip(fixed.len()).enumerate() {
        if name != format!("f{i}") {
            return Err(DatasetError::Format(format!("unexpected feature column `{name}`")));
        }
    }
    let bad = |what: &str, e: &dyn fmt::Display| DatasetError::Format(format!("{what}: {e}"));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let features = if dim == 0 {
            None
        } else {
            Some(
                row.iter()
                    .skip(fixed.len())
                    .map(|t| t.parse::<f64>().map_err(|e| bad("feature", &e)))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        out.push(DatasetRecord {
            prompt: row[0].to_string(),
            target: row[1].parse().map_err(|e| bad("target", &e))?,
            features,
            run_id: row[2].to_string(),
            trial: row[3].parse().map_err(|e| bad("trial", &e))?,
        });
    }
    Ok(out)
}

pub fn export(dataset: &[DatasetRecord], format: ExportFormat, path: &Path) -> Result<(), DatasetError> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        ExportFormat::Jsonl => write_jsonl(w, dataset),
        ExportFormat::Csv => write_csv(w, dataset),
    }
}

pub fn import(format: ExportFormat, path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let r = BufReader::new(File::open(path)?);
    match format {
        ExportFormat::Jsonl => read_jsonl(r),
        ExportFormat::Csv => read_csv(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::run_id;

    fn outcome(set: usize, trial: usize, section: u8, strategy: u8) -> DecisionOutcome {
        DecisionOutcome {
            run_id: run_id(set, 0),
            trial,
            section,
            strategy,
            reward: 0.0,
            headcount_delta: 0.0,
        }
    }

    fn record(target: u8, i: usize) -> DatasetRecord {
        DatasetRecord {
            prompt: format!("p{i}"),
            target,
            features: None,
            run_id: run_id(0, 0),
            trial: i,
        }
    }

    #[test]
    fn run_ids() {
        assert_eq!(parse_run_id("s12r3"), Some((12, 3)));
        assert_eq!(parse_run_id("x1r2"), None);
        assert_eq!(parse_run_id("s1"), None);
    }

    #[test]
    fn one_record_per_outcome() {
        let sets = [ProblemInstance::base()];
        let outcomes: Vec<_> = (0..2012).map(|i| outcome(0, i, (i % 2) as u8, 2)).collect();
        let built = build_dataset(&outcomes, &sets, TargetMode::Single, TargetMode::Single, None).unwrap();
        assert_eq!(built.records.len(), 2012);
        assert_eq!(built.sizing.to_string(), "2 classes × 1000 ⇒ target 2000, actual 2012: OK");
        let short = SizingReport::new(6, 100);
        assert_eq!(short.to_string(), "6 classes × 1000 ⇒ target 6000, actual 100: SHORT by 5900");
    }

    #[test]
    fn multi_targets_and_errors() {
        let sets = [ProblemInstance::base()];
        let o = [outcome(0, 0, 0, 1)];
        let built = build_dataset(&o, &sets, TargetMode::Multi, TargetMode::Multi, None).unwrap();
        assert_eq!(built.records[0].target, 1);
        assert!(matches!(
            build_dataset(&[], &sets, TargetMode::Single, TargetMode::Single, None),
            Err(DatasetError::EmptyOutcomes)
        ));
        let feats = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            build_dataset(&o, &sets, TargetMode::Single, TargetMode::Single, Some(&feats)),
            Err(DatasetError::FeatureCountMismatch { expected: 1, found: 2 })
        ));
        assert!(matches!(
            build_dataset(&[outcome(3, 0, 0, 0)], &sets, TargetMode::Single, TargetMode::Single, None),
            Err(DatasetError::UnknownRun(_))
        ));
    }

    #[test]
    fn stratified_split_sizes() {
        let data: Vec<_> = (0..100).map(|i| record((i % 2) as u8, i)).collect();
        let (train, test) = split(&data, 0.2, 1).unwrap();
        assert_eq!(test.len(), 20);
        assert_eq!(test.iter().filter(|r| r.target == 0).count(), 10);
        assert_eq!(train.len(), 80);
        let data: Vec<_> = (0..240).map(|i| record((i % 2) as u8, i)).collect();
        assert_eq!(split(&data, 0.4, 1).unwrap().1.len(), 96);
        assert_eq!(split(&data, 0.4, 9).unwrap(), split(&data, 0.4, 9).unwrap());
    }

    #[test]
    fn split_errors() {
        let mut data: Vec<_> = (0..10).map(|i| record(0, i)).collect();
        data.push(record(1, 10));
        assert!(matches!(split(&data, 0.2, 0), Err(DatasetError::ClassTooSmall { class: 1, count: 1 })));
        assert!(matches!(split(&data, 1.0, 0), Err(DatasetError::InvalidFraction(_))));
    }

    #[test]
    fn jsonl_omits_missing_features() {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[record(0, 0), record(1, 1), record(0, 2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(!text.contains("features"));
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"prompt":"p0","target":0,"run_id":"s0r0","trial":0}"#
        );
    }

    #[test]
    fn round_trips() {
        let mut a = record(1, 0);
        a.prompt = "line one\n\nline \"two\", with comma".into();
        a.features = Some(vec![0.1, -1.0 / 3.0, 1e-300]);
        let mut b = record(0, 1);
        b.features = Some(vec![2.0, 0.0, -5.5]);
        let data = vec![a, b];

        let mut buf = Vec::new();
        write_jsonl(&mut buf, &data).unwrap();
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), data);

        let mut buf = Vec::new();
        write_csv(&mut buf, &data).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("prompt,target,run_id,trial,f0,f1,f2\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), data);
    }
}
