use serde::{Deserialize, Serialize};

use crate::features::FeatureError;
use crate::linalg::{symmetric_eigen, Matrix};

/// Fewest leading components whose cumulative share of the total reaches
/// `threshold`.
pub fn sree_component_count(eigenvalues: &[f64], threshold: f64) -> Result<usize, FeatureError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(FeatureError::InvalidArgument(format!("threshold {threshold} outside (0, 1]")));
    }
    if eigenvalues.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(FeatureError::InvalidArgument("eigenvalues must be finite and non-negative".into()));
    }
    if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
        return Err(FeatureError::InvalidArgument("eigenvalues must be non-increasing".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total == 0.0 {
        return Err(FeatureError::AllZeroVariance);
    }
    let mut cumulative = 0.0;
    for (i, v) in eigenvalues.iter().enumerate() {
        cumulative += v;
        if cumulative / total >= threshold - 1e-12 {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Principal axes of a data matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Column means removed before projection.
    pub mean: Vec<f64>,
    /// Every covariance eigenvalue, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// `dim x dim`, eigenvectors as columns in eigenvalue order.
    pub axes: Matrix,
    /// Eigenvalues above the rank tolerance.
    pub rank: usize,
}

/// Projection of a matrix onto its leading components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedEmbedding {
    /// `rows x N`.
    pub scores: Matrix,
    /// `dim x N`.
    pub loadings: Matrix,
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

impl ReducedEmbedding {
    pub fn components(&self) -> usize {
        self.scores.cols()
    }

    /// `scores * loadings^T + mean`.
    pub fn reconstruct(&self) -> Matrix {
        let mut back = self
            .scores
            .matmul(&self.loadings.transpose())
            .expect("scores and loadings agree on N");
        for i in 0..back.rows() {
            for (j, m) in self.mean.iter().enumerate() {
                back[(i, j)] += m;
            }
        }
        back
    }
}

impl PcaModel {
    /// Eigen-decomposes the sample covariance (denominator `rows - 1`).
    pub fn fit(data: &Matrix) -> Result<PcaModel, FeatureError> {
        if data.rows() < 2 {
            return Err(FeatureError::InvalidArgument(format!("PCA needs at least 2 rows, got {}", data.rows())));
        }
        if !data.is_finite() {
            return Err(FeatureError::NonFinite);
        }
        let mean = data.column_means();
        let mut cov = data.sub_row(&mean).gram();
        cov.scale(1.0 / (data.rows() - 1) as f64);
        let eig = symmetric_eigen(&cov)?;
        let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let tol = top * 1e-10 * cov.rows().max(1) as f64;
        let rank = eig.values.iter().filter(|&&v| v > tol).count();
        let eigenvalues: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
        let mut axes = eig.vectors;
        // largest-magnitude loading of each axis is positive
        for c in 0..axes.cols() {
            let col = axes.column(c);
            let pivot = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1.abs() + 1e-12 { (i, x) } else { best });
            if col[pivot.0] < 0.0 {
                for r in 0..axes.rows() {
                    axes[(r, c)] = -axes[(r, c)];
                }
            }
        }
        Ok(PcaModel {
            mean,
            eigenvalues,
            axes,
            rank,
        })
    }

    pub fn explained_variance_ratios(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        if total == 0.0 {
            return vec![0.0; self.eigenvalues.len()];
        }
        self.eigenvalues.iter().map(|v| v / total).collect()
    }

    /// First `n` axes as a `dim x n` matrix.
    pub fn loadings(&self, n: usize) -> Matrix {
        let dim = self.axes.rows();
        let mut out = Matrix::zeros(dim, n);
        for r in 0..dim {
            for c in 0..n {
                out[(r, c)] = self.axes[(r, c)];
            }
        }
        out
    }

    fn check_n(&self, n: usize, rows: usize) -> Result<(), FeatureError> {
        if n == 0 || n > (rows.saturating_sub(1)).min(self.axes.rows()) {
            return Err(FeatureError::InvalidArgument(format!(
                "N = {n} must lie in 1..={}",
                rows.saturating_sub(1).min(self.axes.rows())
            )));
        }
        if n > self.rank {
            return Err(FeatureError::RankDeficient { requested: n, rank: self.rank });
        }
        Ok(())
    }

    /// Projects `data` onto the first `n` axes.
    pub fn project(&self, data: &Matrix, n: usize) -> Result<ReducedEmbedding, FeatureError> {
        if data.cols() != self.mean.len() {
            return Err(FeatureError::DimensionMismatch {
                expected: self.mean.len(),
                found: data.cols(),
            });
        }
        if n == 0 || n > self.rank {
            return Err(FeatureError::RankDeficient { requested: n, rank: self.rank });
        }
        let loadings = self.loadings(n);
        let scores = data.sub_row(&self.mean).matmul(&loadings)?;
        Ok(ReducedEmbedding {
            scores,
            loadings,
            explained_variance_ratio: self.explained_variance_ratios()[..n].to_vec(),
            mean: self.mean.clone(),
        })
    }
}

/// Fits PCA on `data` and keeps `n` components.
pub fn pca_reduce(data: &Matrix, n: usize) -> Result<ReducedEmbedding, FeatureError> {
    let model = PcaModel::fit(data)?;
    model.check_n(n, data.rows())?;
    model.project(data, n)
}
