//! L2-regularized multinomial logistic regression fitted by damped Newton.
//!
//! Parameters are one row per class over `[features.., 1]`, so the bias is
//! the last column. All parameters, bias included, carry the penalty; this
//! keeps the full softmax parametrization strictly convex.

use serde::{Deserialize, Serialize};

use crate::linalg::{solve_spd, Matrix};
use crate::probe::ProbeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    /// `classes x (dim + 1)`, bias last.
    pub weights: Matrix,
    /// Per-feature offset and scale applied before the linear map.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub l2_lambda: f64,
    pub classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub l2_lambda: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Center and scale features on the training rows.
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            l2_lambda: 1.0,
            tolerance: 1e-6,
            max_iterations: 500,
            standardize: true,
        }
    }
}

fn log_softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter_mut().for_each(|v| *v -= lse);
}

impl ProbeModel {
    /// Zero weights: every class gets probability `1 / classes`.
    pub fn uniform(classes: usize, dim: usize) -> Self {
        ProbeModel {
            weights: Matrix::zeros(classes, dim + 1),
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            l2_lambda: 0.0,
            classes,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Log-probabilities for one feature row.
    pub fn log_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut z: Vec<f64> = (0..self.classes)
            .map(|k| {
                let w = self.weights.row(k);
                let lin: f64 = (0..d).map(|j| w[j] * (x[j] - self.mean[j]) / self.scale[j]).sum();
                lin + w[d]
            })
            .collect();
        log_softmax(&mut z);
        z
    }

    pub fn predict_proba(&self, features: &Matrix) -> Result<Matrix, ProbeError> {
        self.check_dim(features)?;
        let data = features
            .row_iter()
            .flat_map(|x| self.log_proba_row(x).into_iter().map(f64::exp))
            .collect();
        Ok(Matrix::from_vec(features.rows(), self.classes, data)?)
    }

    /// Most probable class per row, lowest index on ties.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<u8>, ProbeError> {
        self.check_dim(features)?;
        Ok(features.row_iter().map(|x| argmax(&self.log_proba_row(x)) as u8).collect())
    }

    fn check_dim(&self, features: &Matrix) -> Result<(), ProbeError> {
        if features.cols() != self.dim() {
            return Err(ProbeError::InvalidInput(format!(
                "model expects {} features, got {}",
                self.dim(),
                features.cols()
            )));
        }
        Ok(())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_targets(targets: &[u8], classes: usize) -> Result<(), ProbeError> {
    if let Some(t) = targets.iter().find(|&&t| t as usize >= classes) {
        return Err(ProbeError::InvalidInput(format!("target {t} out of range for {classes} classes")));
    }
    Ok(())
}

/// Mean of `-ln p(target)` over rows, natural log.
pub fn nll(model: &ProbeModel, features: &Matrix, targets: &[u8]) -> Result<f64, ProbeError> {
    model.check_dim(features)?;
    check_rows(features, targets)?;
    check_targets(targets, model.classes)?;
    if targets.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = features
        .row_iter()
        .zip(targets)
        .map(|(x, &t)| -model.log_proba_row(x)[t as usize])
        .sum();
    Ok(total / targets.len() as f64)
}

/// Share of rows whose most probable class is the target.
pub fn accuracy(model: &ProbeModel, features: &Matrix, targets: &[u8]) -> Result<f64, ProbeError> {
    check_rows(features, targets)?;
    if targets.is_empty() {
        return Ok(0.0);
    }
    let pred = model.predict(features)?;
    let hits = pred.iter().zip(targets).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / targets.len() as f64)
}

/// Mean `-ln p(target)` for an explicit probability table.
pub fn nll_of_proba(proba: &Matrix, targets: &[u8]) -> Result<f64, ProbeError> {
    check_rows(proba, targets)?;
    check_targets(targets, proba.cols())?;
    if targets.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = proba
        .row_iter()
        .zip(targets)
        .map(|(p, &t)| -p[t as usize].max(f64::MIN_POSITIVE).ln())
        .sum();
    Ok(total / targets.len() as f64)
}

fn check_rows(features: &Matrix, targets: &[u8]) -> Result<(), ProbeError> {
    if features.rows() != targets.len() {
        return Err(ProbeError::InvalidInput(format!(
            "{} feature rows for {} targets",
            features.rows(),
            targets.len()
        )));
    }
    Ok(())
}

/// Penalized cross-entropy `sum_i -ln p(y_i | x_i) + (lambda / 2) |theta|^2`
/// over rows already extended with a trailing 1.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    x: Matrix,
    targets: Vec<u8>,
    classes: usize,
    lambda: f64,
}

impl LogisticObjective {
    /// Objective over raw `features` (a bias column is appended).
    pub fn new(features: &Matrix, targets: &[u8], classes: usize, lambda: f64) -> Result<Self, ProbeError> {
        check_rows(features, targets)?;
        check_targets(targets, classes)?;
        let d = features.cols();
        let mut data = Vec::with_capacity(features.rows() * (d + 1));
        for r in features.row_iter() {
            data.extend_from_slice(r);
            data.push(1.0);
        }
        Ok(LogisticObjective {
            x: Matrix::from_vec(features.rows(), d + 1, data)?,
            targets: targets.to_vec(),
            classes,
            lambda,
        })
    }

    /// Number of parameters, `classes * (dim + 1)`.
    pub fn len(&self) -> usize {
        self.classes * self.x.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn log_proba(&self, theta: &[f64], x: &[f64]) -> Vec<f64> {
        let w = self.x.cols();
        let mut z: Vec<f64> = (0..self.classes)
            .map(|k| theta[k * w..(k + 1) * w].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        log_softmax(&mut z);
        z
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let data: f64 = self
            .x
            .row_iter()
            .zip(&self.targets)
            .map(|(x, &t)| -self.log_proba(theta, x)[t as usize])
            .sum();
        data + 0.5 * self.lambda * theta.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let w = self.x.cols();
        let mut g: Vec<f64> = theta.iter().map(|v| self.lambda * v).collect();
        for (x, &t) in self.x.row_iter().zip(&self.targets) {
            let lp = self.log_proba(theta, x);
            for (k, l) in lp.iter().enumerate() {
                let r = l.exp() - if k == t as usize { 1.0 } else { 0.0 };
                for (gj, xj) in g[k * w..(k + 1) * w].iter_mut().zip(x) {
                    *gj += r * xj;
                }
            }
        }
        g
    }

    pub fn hessian(&self, theta: &[f64]) -> Matrix {
        let w = self.x.cols();
        let n = self.len();
        let mut h = Matrix::zeros(n, n);
        for x in self.x.row_iter() {
            let p: Vec<f64> = self.log_proba(theta, x).iter().map(|l| l.exp()).collect();
            for a in 0..self.classes {
                for b in a..self.classes {
                    let c = p[a] * (if a == b { 1.0 } else { 0.0 } - p[b]);
                    if c == 0.0 {
                        continue;
                    }
                    for j in 0..w {
                        let cj = c * x[j];
                        for l in 0..w {
                            h[(a * w + j, b * w + l)] += cj * x[l];
                        }
                    }
                }
            }
        }
        for a in 0..self.classes {
            for b in 0..a {
                for j in 0..w {
                    for l in 0..w {
                        h[(a * w + j, b * w + l)] = h[(b * w + l, a * w + j)];
                    }
                }
            }
        }
        for i in 0..n {
            h[(i, i)] += self.lambda;
        }
        h
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton's method with Armijo backtracking from `theta = 0`.
fn minimize(obj: &LogisticObjective, options: &FitOptions) -> Result<(Vec<f64>, FitDiagnostics), ProbeError> {
    let mut theta = vec![0.0; obj.len()];
    let mut f = obj.value(&theta);
    let mut g = obj.gradient(&theta);
    let mut iterations = 0;
    while norm(&g) > options.tolerance && iterations < options.max_iterations {
        let step = solve_spd(&obj.hessian(&theta), &g)?;
        let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let fc = obj.value(&cand);
            if fc <= f - 1e-4 * t * slope {
                accepted = Some((cand, fc, None));
                break;
            }
            if t == 1.0 && fc <= f + 1e-12 * (1.0 + f.abs()) {
                // Near the optimum the decrease drowns in rounding; take the
                // full step if it shrinks the gradient instead.
                let gc = obj.gradient(&cand);
                if norm(&gc) < norm(&g) {
                    accepted = Some((cand, fc, Some(gc)));
                    break;
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((cand, fc, gc)) = accepted else { break };
        theta = cand;
        f = fc;
        g = gc.unwrap_or_else(|| obj.gradient(&theta));
    }
    let grad_norm = norm(&g);
    Ok((
        theta,
        FitDiagnostics {
            iterations,
            grad_norm,
            converged: grad_norm <= options.tolerance,
        },
    ))
}

fn standardizer(features: &Matrix, enabled: bool) -> (Vec<f64>, Vec<f64>) {
    let d = features.cols();
    if !enabled || features.rows() == 0 {
        return (vec![0.0; d], vec![1.0; d]);
    }
    let mean = features.column_means();
    let n = features.rows() as f64;
    let scale = (0..d)
        .map(|j| {
            let var = features.row_iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Fits one model on all rows. A missed tolerance is reported in the
/// diagnostics, not as an error.
pub fn fit_logistic(
    features: &Matrix,
    targets: &[u8],
    classes: usize,
    options: &FitOptions,
) -> Result<(ProbeModel, FitDiagnostics), ProbeError> {
    if classes == 0 {
        return Err(ProbeError::InvalidInput("classes must be positive".into()));
    }
    if !(options.l2_lambda > 0.0 && options.l2_lambda.is_finite()) {
        return Err(ProbeError::InvalidInput(format!("l2_lambda must be positive, got {}", options.l2_lambda)));
    }
    if !features.is_finite() {
        return Err(ProbeError::NonFinite);
    }
    let (mean, scale) = standardizer(features, options.standardize);
    let d = features.cols();
    let mut data = features.as_slice().to_vec();
    for row in data.chunks_mut(d.max(1)).take(features.rows()) {
        for j in 0..d {
            row[j] = (row[j] - mean[j]) / scale[j];
        }
    }
    let std = Matrix::from_vec(features.rows(), d, data)?;
    let obj = LogisticObjective::new(&std, targets, classes, options.l2_lambda)?;
    let (theta, diag) = minimize(&obj, options)?;
    let model = ProbeModel {
        weights: Matrix::from_vec(classes, d + 1, theta)?,
        mean,
        scale,
        l2_lambda: options.l2_lambda,
        classes,
    };
    Ok((model, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_problem(seed: u64, n: usize, d: usize, classes: usize) -> (Matrix, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let y = (0..n).map(|_| rng.gen_range(0..classes) as u8).collect();
        (x, y)
    }

    #[test]
    fn uniform_nll_is_ln_classes() {
        let x = Matrix::zeros(4, 3);
        for k in [2usize, 6] {
            let m = ProbeModel::uniform(k, 3);
            let v = nll(&m, &x, &[0, 1, 1, 0]).unwrap();
            assert!((v - (k as f64).ln()).abs() < 1e-12);
        }
                let onehot = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(nll_of_proba(&onehot, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let (x, y) = small_problem(seed, 12, 3, 3);
            let obj = LogisticObjective::new(&x, &y, 3, 0.7).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let theta: Vec<f64> = (0..obj.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = obj.gradient(&theta);
            let h = 1e-5;
            for i in 0..theta.len() {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (obj.value(&up) - obj.value(&dn)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-4 * fd.abs().max(1.0), "{fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let (x, y) = small_problem(9, 10, 2, 3);
        let obj = LogisticObjective::new(&x, &y, 3, 0.5).unwrap();
        let theta: Vec<f64> = (0..obj.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let hess = obj.hessian(&theta);
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[i] += h;
            dn[i] -= h;
            let (gu, gd) = (obj.gradient(&up), obj.gradient(&dn));
            for j in 0..theta.len() {
                let fd = (gu[j] - gd[j]) / (2.0 * h);
                assert!((fd - hess[(j, i)]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn fitted_gradient_vanishes_and_rows_sum_to_one() {
        let (x, y) = small_problem(3, 60, 4, 3);
        let (m, diag) = fit_logistic(&x, &y, 3, &FitOptions::default()).unwrap();
        assert!(diag.converged && diag.grad_norm <= 1e-6);
        let p = m.predict_proba(&x).unwrap();
        for r in p.row_iter() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(r.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn heavy_penalty_shrinks_to_uniform() {
        let (x, y) = small_problem(4, 40, 3, 2);
        let opts = FitOptions {
            l2_lambda: 1e12,
            ..FitOptions::default()
        };
        let (m, _) = fit_logistic(&x, &y, 2, &opts).unwrap();
        assert!(m.weights.as_slice().iter().all(|w| w.abs() < 1e-9));
        assert!((nll(&m, &x, &y).unwrap() - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reported() {
        let (x, y) = small_problem(5, 30, 2, 2);
        let opts = FitOptions {
            max_iterations: 0,
            ..FitOptions::default()
        };
        let (_, diag) = fit_logistic(&x, &y, 2, &opts).unwrap();
        assert!(!diag.converged);
        assert_eq!(diag.iterations, 0);
    }

    #[test]
    fn rejects_bad_input() {
        let x = Matrix::zeros(2, 1);
        assert!(fit_logistic(&x, &[0, 2], 2, &FitOptions::default()).is_err());
        assert!(fit_logistic(&x, &[0], 2, &FitOptions::default()).is_err());
        let opts = FitOptions {
            l2_lambda: 0.0,
            ..FitOptions::default()
        };
        assert!(fit_logistic(&x, &[0, 1], 2, &opts).is_err());
    }
}
