use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::probe::{CvResult, FoldMetrics, ProbeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Model,
    Chance,
    Untrained,
}

/// A reference row. Missing metrics mean the baseline could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub name: String,
    pub kind: RowKind,
    pub classes: usize,
    pub nll: Option<f64>,
    pub accuracy: Option<f64>,
}

impl Baseline {
    pub fn unavailable(name: &str, kind: RowKind, classes: usize) -> Self {
        Baseline {
            name: name.to_string(),
            kind,
            classes,
            nll: None,
            accuracy: None,
        }
    }
}

/// Uniform guessing over `classes`: NLL `ln classes`, accuracy `1 / classes`
/// whatever the class frequencies.
pub fn chance_baseline(targets: &[u8], classes: usize) -> Result<Baseline, ProbeError> {
    if targets.is_empty() {
        return Err(ProbeError::InvalidInput("chance baseline needs targets".into()));
    }
    if classes == 0 {
        return Err(ProbeError::InvalidInput("classes must be positive".into()));
    }
    crate::probe::logistic::check_targets(targets, classes)?;
    Ok(Baseline {
        name: format!("chance ({classes} classes)"),
        kind: RowKind::Chance,
        classes,
        nll: Some((classes as f64).ln()),
        accuracy: Some(1.0 / classes as f64),
    })
}

/// Cross-validated metrics for one named probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    pub classes: usize,
    pub nll: f64,
    pub accuracy: f64,
    pub folds: Vec<FoldMetrics>,
}

impl ModelResult {
    pub fn from_cv(name: &str, cv: &CvResult) -> Self {
        ModelResult {
            name: name.to_string(),
            classes: cv.classes,
            nll: cv.mean_nll(),
            accuracy: cv.mean_accuracy(),
            folds: cv.folds.clone(),
        }
    }

    /// A summary row without fold detail.
    pub fn summary(name: &str, classes: usize, nll: f64, accuracy: f64) -> Self {
        ModelResult {
            name: name.to_string(),
            classes,
            nll,
            accuracy,
            folds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub kind: RowKind,
    pub classes: usize,
    pub nll: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub model: String,
    pub baseline: String,
    pub lower_nll: bool,
    pub higher_accuracy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFolds {
    pub model: String,
    pub folds: Vec<FoldMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub folds: Vec<ModelFolds>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
}

/// Model rows first, then baselines. Each model is compared against every
/// available baseline with the same class count.
pub fn build_report(models: &[ModelResult], baselines: &[Baseline]) -> EvalReport {
    let mut rows = Vec::new();
    let mut folds = Vec::new();
    let mut warnings = Vec::new();
    for m in models {
        rows.push(ReportRow {
            name: m.name.clone(),
            kind: RowKind::Model,
            classes: m.classes,
            nll: Some(m.nll),
            accuracy: Some(m.accuracy),
        });
        if !m.folds.is_empty() {
            folds.push(ModelFolds {
                model: m.name.clone(),
                folds: m.folds.clone(),
            });
        }
        for f in m.folds.iter().filter(|f| !f.converged) {
            warnings.push(format!(
                "{}: fold {} stopped after {} iterations with gradient norm {:e}",
                m.name, f.fold, f.iterations, f.grad_norm
            ));
        }
    }
    for b in baselines {
        rows.push(ReportRow {
            name: b.name.clone(),
            kind: b.kind,
            classes: b.classes,
            nll: b.nll,
            accuracy: b.accuracy,
        });
        if b.nll.is_none() {
            warnings.push(format!("{}: unavailable", b.name));
        }
    }
    let mut verdicts = Vec::new();
    for m in models {
        for b in baselines.iter().filter(|b| b.classes == m.classes) {
            if let (Some(bn), Some(ba)) = (b.nll, b.accuracy) {
                verdicts.push(Verdict {
                    model: m.name.clone(),
                    baseline: b.name.clone(),
                    lower_nll: m.nll < bn,
                    higher_accuracy: m.accuracy > ba,
                });
            }
        }
    }
    EvalReport {
        rows,
        folds,
        verdicts,
        warnings,
    }
}

/// At most four decimals, trailing zeros dropped.
pub fn format_metric(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        &s
    };
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), format_metric)
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(0).max(5) + 2;
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}{:<10}Accuracy", "Model", "NLL");
        let _ = writeln!(out, "{}", "-".repeat(width + 18));
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}{:<10}{}", r.name, cell(r.nll), cell(r.accuracy));
        }
        if !self.verdicts.is_empty() {
            out.push('\n');
            for v in &self.verdicts {
                let word = |b: bool| if b { "better" } else { "not better" };
                let _ = writeln!(
                    out,
                    "{} vs {}: NLL {}, accuracy {}",
                    v.model,
                    v.baseline,
                    word(v.lower_nll),
                    word(v.higher_accuracy)
                );
            }
        }
        if !self.warnings.is_empty() {
            out.push('\n');
            for w in &self.warnings {
                let _ = writeln!(out, "warning: {w}");
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ProbeError> {
        Ok(serde_json::from_str(text)?)
    }

    /// `model,fold,nll,accuracy` per fold.
    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<(), ProbeError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["model", "fold", "nll", "accuracy"])?;
        for m in &self.folds {
            for f in &m.folds {
                wtr.write_record([m.model.clone(), f.fold.to_string(), format!("{:?}", f.nll), format!("{:?}", f.accuracy)])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Checks `nll >= 0` and `0 <= accuracy <= 1` on every row and fold.
    pub fn is_well_formed(&self) -> bool {
        let ok = |n: f64, a: f64| n >= 0.0 && (0.0..=1.0).contains(&a);
        self.rows
            .iter()
            .all(|r| r.nll.is_none_or(|n| n >= 0.0) && r.accuracy.is_none_or(|a| (0.0..=1.0).contains(&a)))
            && self.folds.iter().flat_map(|m| &m.folds).all(|f| ok(f.nll, f.accuracy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_one() -> EvalReport {
        build_report(
            &[
                ModelResult::summary("single", 2, 0.63, 0.64),
                ModelResult::summary("multi", 6, 1.18, 0.42),
            ],
            &[],
        )
    }

    #[test]
    fn chance_rows() {
        let b = chance_baseline(&[0, 0, 0, 1], 2).unwrap();
        assert_eq!(cell(b.nll), "0.6931");
        assert_eq!(b.accuracy, Some(0.5));
        let b = chance_baseline(&[5], 6).unwrap();
        assert!((b.nll.unwrap() - 1.7918).abs() < 1e-4);
        let b = chance_baseline(&[0], 1).unwrap();
        assert_eq!((b.nll, b.accuracy), (Some(0.0), Some(1.0)));
        assert!(chance_baseline(&[], 2).is_err());
        assert!(chance_baseline(&[0], 6).unwrap().nll > chance_baseline(&[0], 2).unwrap().nll);
    }

    #[test]
    fn model_rows_render() {
        let text = table_one().to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Model   NLL       Accuracy");
        assert_eq!(lines[2], "single  0.63      0.64");
        assert_eq!(lines[3], "multi   1.18      0.42");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn json_round_trip() {
        let mut r = build_report(
            &[ModelResult::summary("single", 2, 0.6534, 0.6576)],
            &[
                chance_baseline(&[0, 1], 2).unwrap(),
                Baseline::unavailable("untrained", RowKind::Untrained, 2),
            ],
        );
        r.folds.push(ModelFolds {
            model: "single".into(),
            folds: vec![FoldMetrics {
                fold: 0,
                n_train: 9,
                n_test: 1,
                nll: 0.1 / 3.0,
                accuracy: 1.0,
                iterations: 4,
                grad_norm: 1e-9,
                converged: true,
            }],
        });
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        assert_eq!(r.verdicts.len(), 1);
        assert!(r.verdicts[0].lower_nll && r.verdicts[0].higher_accuracy);
        assert!(r.to_text().lines().any(|l| l.starts_with("untrained") && l.ends_with("n/a       n/a")));
        assert!(r.is_well_formed());
        let mut csv = Vec::new();
        r.write_metrics_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "model,fold,nll,accuracy\nsingle,0,0.03333333333333333,1.0\n"
        );
    }

    #[test]
    fn metric_format() {
        assert_eq!(format_metric(0.5), "0.5");
        assert_eq!(format_metric(2f64.ln()), "0.6931");
        assert_eq!(format_metric(1.0), "1");
        assert_eq!(format_metric(-0.00001), "0");
    }
}
