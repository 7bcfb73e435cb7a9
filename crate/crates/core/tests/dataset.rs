use std::collections::HashMap;

use vsm_actr::codec::TargetMode;
use vsm_actr::dataset::{build_dataset, export, import, render_prompt, split, ExportFormat};
use vsm_actr::task::{run_batch, BatchConfig, ProblemInstance};

const SINGLE: &str = include_str!("fixtures/prompt_single_base.txt");
const MULTI: &str = include_str!("fixtures/prompt_multi_base.txt");

#[test]
fn base_prompts_match_fixtures() {
    let base = ProblemInstance::base();
    assert_eq!(render_prompt(&base, TargetMode::Single), SINGLE);
    assert_eq!(render_prompt(&base, TargetMode::Multi), MULTI);
}

#[test]
fn targets_rederivable_from_provenance() {
    let sets = vsm_actr::dataset::generate_problem_sets(11, 4);
    let config = BatchConfig {
        runs_per_set: 2,
        trials_per_run: 8,
        ..BatchConfig::default()
    };
    let batch = run_batch(&sets, &config).unwrap();
    let store: HashMap<(String, usize), _> =
        batch.outcomes.iter().map(|o| ((o.run_id.clone(), o.trial), o.clone())).collect();
    for mode in [TargetMode::Single, TargetMode::Multi] {
        let built = build_dataset(&batch.outcomes, &sets, mode, mode, None).unwrap();
        assert_eq!(built.records.len(), batch.outcomes.len());
        for r in &built.records {
            let o = &store[&(r.run_id.clone(), r.trial)];
            assert_eq!(r.target, mode.target(o));
            assert!((r.target as usize) < mode.classes());
        }
        let (train, test) = split(&built.records, 0.2, 3).unwrap();
        assert_eq!(train.len() + test.len(), built.records.len());
    }
}

#[test]
fn export_import_files() {
    let sets = [ProblemInstance::base()];
    let batch = run_batch(&sets, &BatchConfig::default()).unwrap();
    let feats: Vec<Vec<f64>> = (0..batch.outcomes.len()).map(|i| vec![i as f64 / 7.0, 1.0]).collect();
    let built = build_dataset(&batch.outcomes, &sets, TargetMode::Multi, TargetMode::Multi, Some(&feats)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for format in [ExportFormat::Jsonl, ExportFormat::Csv] {
        let path = dir.path().join(format!("ds.{}", format.extension()));
        export(&built.records, format, &path).unwrap();
        assert_eq!(import(format, &path).unwrap(), built.records);
    }
}
