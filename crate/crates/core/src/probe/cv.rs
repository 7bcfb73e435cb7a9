use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::probe::logistic::check_targets;
use crate::probe::{accuracy, fit_logistic, nll, FitOptions, ProbeError, ProbeModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub l2_lambda: f64,
    pub folds: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            l2_lambda: 1.0,
            folds: 10,
            seed: 0,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub nll: f64,
    pub accuracy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub classes: usize,
    pub models: Vec<ProbeModel>,
    pub folds: Vec<FoldMetrics>,
}

impl CvResult {
    /// Held-out NLL averaged over folds.
    pub fn mean_nll(&self) -> f64 {
        self.folds.iter().map(|f| f.nll).sum::<f64>() / self.folds.len() as f64
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.folds.iter().map(|f| f.accuracy).sum::<f64>() / self.folds.len() as f64
    }

    /// Folds whose fit stopped before reaching the gradient tolerance.
    pub fn non_converged(&self) -> Vec<usize> {
        self.folds.iter().filter(|f| !f.converged).map(|f| f.fold).collect()
    }
}

/// Fold index per row. Each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped, so fold sizes differ by at
/// most one and every class is spread evenly.
pub fn stratified_folds(targets: &[u8], folds: usize, seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &t) in targets.iter().enumerate() {
        by_class.entry(t).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; targets.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

fn select_rows(features: &Matrix, rows: &[usize]) -> Result<Matrix, ProbeError> {
    let data = rows.iter().flat_map(|&i| features.row(i).iter().copied()).collect();
    Ok(Matrix::from_vec(rows.len(), features.cols(), data)?)
}

/// Stratified k-fold cross-validation of the logistic probe.
pub fn fit_probe(
    features: &Matrix,
    targets: &[u8],
    classes: usize,
    options: &ProbeOptions,
) -> Result<CvResult, ProbeError> {
    let k = options.folds;
    if k < 2 {
        return Err(ProbeError::InvalidInput(format!("need at least 2 folds, got {k}")));
    }
    if features.rows() != targets.len() {
        return Err(ProbeError::InvalidInput(format!(
            "{} feature rows for {} targets",
            features.rows(),
            targets.len()
        )));
    }
    check_targets(targets, classes)?;
    let needed = k * classes;
    if targets.len() < needed {
        return Err(ProbeError::TooFewSamples {
            needed,
            found: targets.len(),
        });
    }
    if !features.is_finite() {
        return Err(ProbeError::NonFinite);
    }
    let assignment = stratified_folds(targets, k, options.seed);
    let fit_options = FitOptions {
        l2_lambda: options.l2_lambda,
        tolerance: options.tolerance,
        max_iterations: options.max_iterations,
        standardize: true,
    };
    let results: Vec<Result<(ProbeModel, FoldMetrics), ProbeError>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..targets.len()).partition(|&i| assignment[i] == fold);
            let train_targets: Vec<u8> = train.iter().map(|&i| targets[i]).collect();
            let test_targets: Vec<u8> = test.iter().map(|&i| targets[i]).collect();
            if test.is_empty() || train.is_empty() {
                return Err(ProbeError::DegenerateFold {
                    fold,
                    reason: "empty train or test side".into(),
                });
            }
            if train_targets.iter().all(|&t| t == train_targets[0]) {
                return Err(ProbeError::DegenerateFold {
                    fold,
                    reason: format!("training rows all have class {}", train_targets[0]),
                });
            }
            let train_x = select_rows(features, &train)?;
            let test_x = select_rows(features, &test)?;
            let (model, diag) = fit_logistic(&train_x, &train_targets, classes, &fit_options)?;
            let metrics = FoldMetrics {
                fold,
                n_train: train.len(),
                n_test: test.len(),
                nll: nll(&model, &test_x, &test_targets)?,
                accuracy: accuracy(&model, &test_x, &test_targets)?,
                iterations: diag.iterations,
                grad_norm: diag.grad_norm,
                converged: diag.converged,
            };
            Ok((model, metrics))
        })
        .collect();
    let mut models = Vec::with_capacity(k);
    let mut folds = Vec::with_capacity(k);
    for r in results {
        let (m, f) = r?;
        models.push(m);
        folds.push(f);
    }
    Ok(CvResult { classes, models, folds })
}
