use serde::{Deserialize, Serialize};

use crate::features::FeatureError;
use crate::linalg::{log_det_spd, LinalgError, Matrix};

/// Equal-length copies of ragged matrices plus a mask of original rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Padded {
    pub matrices: Vec<Matrix>,
    /// `mask[k][i]` is true when row `i` of matrix `k` is original data.
    pub mask: Vec<Vec<bool>>,
}

/// Pads every matrix to the longest row count. Padding rows hold the source
/// matrix's column means (zeros for an empty source).
pub fn pad_and_impute(ragged: &[Matrix]) -> Result<Padded, FeatureError> {
    let Some(first) = ragged.first() else {
        return Ok(Padded {
            matrices: Vec::new(),
            mask: Vec::new(),
        });
    };
    let dim = first.cols();
    if let Some(bad) = ragged.iter().find(|m| m.cols() != dim) {
        return Err(FeatureError::MixedDims {
            expected: dim,
            found: bad.cols(),
        });
    }
    let len = ragged.iter().map(Matrix::rows).max().unwrap_or(0);
    let mut matrices = Vec::with_capacity(ragged.len());
    let mut mask = Vec::with_capacity(ragged.len());
    for m in ragged {
        let means = m.column_means();
        let mut data = m.as_slice().to_vec();
        for _ in m.rows()..len {
            data.extend_from_slice(&means);
        }
        matrices.push(Matrix::from_vec(len, dim, data)?);
        mask.push((0..len).map(|i| i < m.rows()).collect());
    }
    Ok(Padded { matrices, mask })
}

fn l2_normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / norm).collect()
}

/// Row-major flattening of `reduced` followed by `llm_vec`. With
/// `normalize_parts`, each part is scaled to unit L2 norm first.
pub fn flatten_and_concat(reduced: &Matrix, llm_vec: &[f64], normalize_parts: bool) -> Vec<f64> {
    let (a, b) = if normalize_parts {
        (l2_normalized(reduced.as_slice()), l2_normalized(llm_vec))
    } else {
        (reduced.as_slice().to_vec(), llm_vec.to_vec())
    };
    let mut out = a;
    out.extend(b);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilksResult {
    pub lambda: f64,
    /// Bartlett's approximation `-(n - 1 - (p + g) / 2) ln lambda`.
    pub bartlett_chi2: f64,
    /// `p (g - 1)`.
    pub dof: usize,
}

/// `det(E) / det(E + H)` for within-group scatter `E` and between-group
/// scatter `H`.
pub fn wilks_lambda(groups: &[(String, Matrix)]) -> Result<WilksResult, FeatureError> {
    let g = groups.len();
    if g < 2 {
        return Err(FeatureError::InvalidArgument(format!("need at least 2 groups, got {g}")));
    }
    let p = groups[0].1.cols();
    for (label, m) in groups {
        if m.cols() != p {
            return Err(FeatureError::MixedDims {
                expected: p,
                found: m.cols(),
            });
        }
        if m.rows() < 2 {
            return Err(FeatureError::InvalidArgument(format!("group `{label}` has fewer than 2 rows")));
        }
    }
    let n: usize = groups.iter().map(|(_, m)| m.rows()).sum();
    if n <= p + g {
        return Err(FeatureError::InvalidArgument(format!("{n} rows is too few for {p} dims and {g} groups")));
    }
    let mut grand = vec![0.0; p];
    for (_, m) in groups {
        for r in m.row_iter() {
            for (acc, x) in grand.iter_mut().zip(r) {
                *acc += x;
            }
        }
    }
    grand.iter_mut().for_each(|x| *x /= n as f64);

    let mut within = Matrix::zeros(p, p);
    let mut between = Matrix::zeros(p, p);
    for (_, m) in groups {
        let mean = m.column_means();
        within = within.add(&m.sub_row(&mean).gram())?;
        let d: Vec<f64> = mean.iter().zip(&grand).map(|(a, b)| a - b).collect();
        for a in 0..p {
            for b in 0..p {
                between[(a, b)] += m.rows() as f64 * d[a] * d[b];
            }
        }
    }
    let total = within.add(&between)?;
    let singular = |e: LinalgError| match e {
        LinalgError::NotPositiveDefinite => FeatureError::SingularScatter,
        other => FeatureError::Linalg(other),
    };
    let ln_lambda = log_det_spd(&within).map_err(singular)? - log_det_spd(&total).map_err(singular)?;
    let lambda = ln_lambda.exp().min(1.0);
    let factor = (n as f64 - 1.0) - (p + g) as f64 / 2.0;
    Ok(WilksResult {
        lambda,
        bartlett_chi2: -factor * ln_lambda,
        dof: p * (g - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn equal_lengths_untouched() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let p = pad_and_impute(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(p.matrices, [a, b]);
        assert!(p.mask.iter().flatten().all(|&x| x));
    }

    #[test]
    fn short_matrix_padded_with_its_mean() {
        let p = pad_and_impute(&[m(&[&[10.0]]), m(&[&[1.0], &[2.0], &[3.0]])]).unwrap();
        assert_eq!(p.matrices[0].column(0), [10.0, 10.0, 10.0]);
        assert_eq!(p.mask[0], [true, false, false]);
        assert!(matches!(
            pad_and_impute(&[Matrix::zeros(1, 4), Matrix::zeros(1, 5)]),
            Err(FeatureError::MixedDims { expected: 4, found: 5 })
        ));
    }

    #[test]
    fn concat_shapes() {
        let r = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let out = flatten_and_concat(&r, &[7.0, 8.0, 9.0, 10.0], false);
        assert_eq!(out, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        assert_eq!(flatten_and_concat(&Matrix::zeros(0, 3), &[1.0, 2.0], false), [1.0, 2.0]);
        let n = flatten_and_concat(&r, &[3.0, 4.0], true);
        assert!((n[7] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn identical_means_give_lambda_one() {
        let a = m(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        let b = m(&[&[2.0, 0.0], &[-2.0, 0.0], &[0.0, 2.0], &[0.0, -2.0]]);
        let w = wilks_lambda(&[("a".into(), a), ("b".into(), b)]).unwrap();
        assert!((w.lambda - 1.0).abs() < 1e-12);
        assert_eq!(w.dof, 2);
    }

    #[test]
    fn separated_groups_give_small_lambda() {
        // within scatter 2 * (4 * 0.01) = 0.08, between 8 * 100 = 800
        let spread = [-0.1, 0.1, -0.1, 0.1];
        let a = Matrix::from_vec(4, 1, spread.iter().map(|d| -10.0 + d).collect()).unwrap();
        let b = Matrix::from_vec(4, 1, spread.iter().map(|d| 10.0 + d).collect()).unwrap();
        let w = wilks_lambda(&[("lo".into(), a), ("hi".into(), b)]).unwrap();
        let oracle = 0.08 / (0.08 + 800.0);
        assert!((w.lambda - oracle).abs() < 1e-12);
        assert!(w.lambda < 0.01);
        assert!(w.bartlett_chi2 > 0.0);
    }

    #[test]
    fn one_group_rejected() {
        let a = Matrix::zeros(4, 1);
        assert!(wilks_lambda(&[("a".into(), a)]).is_err());
    }
}
