use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use vsm_actr::codec::{distill_selected, emit_text};
use vsm_actr::dataset::generate_problem_sets;
use vsm_actr::engine::TraceLog;
use vsm_actr::task::{run_batch, write_outcomes, write_problem_sets};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::manifest::write_manifest;
use crate::stages::{
    create, io_err, load_outcomes, task_err, trace_file, write_text, TraceIndexRow, OUTCOMES, PROBLEM_SETS,
    SELECTED, TRACE_DIR, TRACE_INDEX,
};

pub fn simulate(root: &Path, cfg: &PipelineConfig) -> Result<()> {
    let sets = generate_problem_sets(cfg.seed(), cfg.sets);
    let batch = run_batch(&sets, &cfg.batch).map_err(task_err)?;

    write_problem_sets(create(root, PROBLEM_SETS)?, &sets).map_err(task_err)?;
    write_outcomes(create(root, OUTCOMES)?, &batch.outcomes).map_err(task_err)?;

    let trace_dir = root.join(TRACE_DIR);
    if trace_dir.exists() {
        fs::remove_dir_all(&trace_dir).map_err(io_err(&trace_dir))?;
    }
    let mut outputs = vec![PathBuf::from(PROBLEM_SETS), PathBuf::from(OUTCOMES)];
    let mut index = Vec::with_capacity(batch.outcomes.len());
    for run in &batch.traces {
        let text = emit_text(&run.log).to_string();
        let rel = trace_file(&run.run_id);
        write_text(root, &rel.to_string_lossy(), &text)?;
        outputs.push(rel);
        let preamble_end = run.trial_spans.first().map_or(0, |s| s.start);
        let preamble: TraceLog = run.log.events[..preamble_end].iter().cloned().collect();
        let mut line = emit_text(&preamble).lines.len();
        for (trial, _) in run.trial_spans.iter().enumerate() {
            let lines = emit_text(&run.trial_log(trial)).lines.len();
            index.push(TraceIndexRow {
                run_id: run.run_id.clone(),
                trial,
                first_line: line,
                lines,
            });
            line += lines;
        }
    }
    let mut wtr = csv::Writer::from_writer(create(root, TRACE_INDEX)?);
    for row in &index {
        wtr.serialize(row).map_err(CliError::other)?;
    }
    wtr.flush().map_err(io_err(&root.join(TRACE_INDEX)))?;
    outputs.push(PathBuf::from(TRACE_INDEX));

    write_manifest(root, "simulate", cfg.seed(), cfg, &[], &outputs)?;
    println!(
        "simulated {} outcomes from {} problem set(s) x {} run(s)",
        batch.outcomes.len(),
        sets.len(),
        cfg.batch.runs_per_set
    );
    Ok(())
}

pub fn distill(root: &Path, cfg: &PipelineConfig) -> Result<()> {
    let outcomes = load_outcomes(root)?;
    let selected = distill_selected(&outcomes, cfg.mode).map_err(CliError::other)?;
    let targets = selected.targets();
    let mut wtr = csv::Writer::from_writer(create(root, SELECTED)?);
    wtr.write_record(["run_id", "trial", "section", "strategy", "compound", "target"])
        .map_err(CliError::other)?;
    for ((o, r), t) in outcomes.iter().zip(&selected.records).zip(&targets) {
        wtr.write_record([
            o.run_id.clone(),
            o.trial.to_string(),
            r.section_code.to_string(),
            r.strategy_code.to_string(),
            r.compound_code.to_string(),
            t.to_string(),
        ])
        .map_err(CliError::other)?;
    }
    wtr.flush().map_err(io_err(&root.join(SELECTED)))?;
    write_manifest(
        root,
        "distill",
        cfg.seed(),
        cfg,
        &[PathBuf::from(OUTCOMES)],
        &[PathBuf::from(SELECTED)],
    )?;
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    targets.iter().for_each(|t| *counts.entry(*t).or_default() += 1);
    let summary: Vec<String> = counts.iter().map(|(t, n)| format!("{t}: {n}")).collect();
    println!("distilled {} targets ({} mode): {}", targets.len(), cfg.mode, summary.join(", "));
    Ok(())
}
