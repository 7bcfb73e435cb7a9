use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vsm_actr::features::{wilks_lambda, WilksResult};
use vsm_actr::linalg::Matrix;
use vsm_actr::probe::{format_metric, progression_stats, OrderedLogitOutcome, ProgressionStats};
use vsm_actr::task::{DecisionOutcome, Strategy};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::manifest::write_manifest;
use crate::stages::{
    check_index_matches, load_index, load_matrix, load_outcomes, write_text, OUTCOMES, PROGRESSION_JSON,
    PROGRESSION_TEXT, REDUCED, TRACE_INDEX,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub outcomes: usize,
    pub progression: ProgressionStats,
    /// Group effect of strategy on mean reduced trace embeddings per trial.
    pub strategy_wilks: Option<WilksResult>,
}

/// Per-trial mean reduced embedding, grouped by strategy. Groups with fewer
/// than two trials are dropped.
fn strategy_groups(root: &Path, outcomes: &[DecisionOutcome]) -> Result<Vec<(String, Matrix)>> {
    let index = load_index(root)?;
    check_index_matches(&index, outcomes)?;
    let reduced = load_matrix(root, REDUCED)?.matrix;
    let n = reduced.cols();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); 3];
    let mut counts = [0usize; 3];
    let mut offset = 0;
    for (row, o) in index.iter().zip(outcomes) {
        let mut mean = vec![0.0; n];
        for line in offset..offset + row.lines {
            for (m, v) in mean.iter_mut().zip(reduced.row(line)) {
                *m += v / row.lines.max(1) as f64;
            }
        }
        offset += row.lines;
        groups[o.strategy as usize].extend(mean);
        counts[o.strategy as usize] += 1;
    }
    Ok(Strategy::ALL
        .iter()
        .zip(groups)
        .zip(counts)
        .filter(|(_, c)| *c >= 2)
        .map(|((s, data), c)| (s.name().to_string(), Matrix::from_vec(c, n, data).expect("shape")))
        .collect())
}

fn render(a: &Analysis) -> String {
    let p = &a.progression;
    let mut out = String::new();
    let _ = writeln!(out, "{} outcomes\n", a.outcomes);
    let _ = writeln!(out, "{:<7}{:<7}{:<15}expert share", "trial", "n", "mean strategy");
    for t in &p.per_trial {
        let _ = writeln!(
            out,
            "{:<7}{:<7}{:<15}{}",
            t.trial,
            t.n,
            format_metric(t.mean_strategy),
            format_metric(t.expert_share)
        );
    }
    let _ = writeln!(out, "\nOLS slope of strategy on trial: {}", format_metric(p.ols.slope));
    match &p.ordered_logit {
        OrderedLogitOutcome::Fit(f) => {
            let _ = writeln!(
                out,
                "ordered logit: slope {} (se {}), thresholds {} / {}",
                format_metric(f.slope),
                format_metric(f.std_errors[0]),
                format_metric(f.thresholds[0]),
                format_metric(f.thresholds[1])
            );
        }
        OrderedLogitOutcome::Separation(s) => {
            let _ = writeln!(out, "ordered logit: separation ({}), direction {}", s.message, s.direction);
        }
        OrderedLogitOutcome::MissingLevels { present } => {
            let _ = writeln!(out, "ordered logit: only levels {present:?} occur");
        }
    }
    if let Some(w) = &a.strategy_wilks {
        let _ = writeln!(
            out,
            "strategy effect on trace embeddings: Wilks lambda {}, chi2 {} on {} df",
            format_metric(w.lambda),
            format_metric(w.bartlett_chi2),
            w.dof
        );
    }
    out
}

/// Progression statistics from the outcomes; when reduced trace embeddings
/// are present, also Wilks' lambda for the strategy effect on them.
pub fn analyze(root: &Path, cfg: &PipelineConfig) -> Result<()> {
    let outcomes = load_outcomes(root)?;
    let progression = progression_stats(&outcomes).map_err(|e| CliError::Other(format!("analyze: {e}")))?;
    let mut inputs = vec![PathBuf::from(OUTCOMES)];
    let mut strategy_wilks = None;
    if root.join(REDUCED).is_file() && root.join(TRACE_INDEX).is_file() {
        inputs.extend([PathBuf::from(TRACE_INDEX), PathBuf::from(REDUCED)]);
        let groups = strategy_groups(root, &outcomes)?;
        if groups.len() >= 2 {
            strategy_wilks = wilks_lambda(&groups).ok();
        }
    }
    let analysis = Analysis {
        outcomes: outcomes.len(),
        progression,
        strategy_wilks,
    };
    let text = render(&analysis);
    write_text(root, PROGRESSION_TEXT, &text)?;
    let json = serde_json::to_string_pretty(&analysis).map_err(CliError::other)?;
    write_text(root, PROGRESSION_JSON, &format!("{json}\n"))?;
    write_manifest(
        root,
        "analyze",
        cfg.seed(),
        cfg,
        &inputs,
        &[PROGRESSION_TEXT.into(), PROGRESSION_JSON.into()],
    )?;
    print!("{text}");
    Ok(())
}
