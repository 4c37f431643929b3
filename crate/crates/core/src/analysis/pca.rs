#![allow(clippy::needless_range_loop)]

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, FeatureMatrix, FeatureSource};

pub const DEFAULT_COMPONENTS: usize = 3;

const MAX_SWEEPS: usize = 100;

/// Mean, leading principal directions and their variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// `k` orthonormal direction vectors, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Every covariance eigenvalue (clamped at zero), non-increasing.
    pub all_variances: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
    pub source: FeatureSource,
}

impl PcaResult {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    /// Variance left out of the `k`-component reconstruction.
    pub fn residual_variance(&self) -> f64 {
        self.all_variances[self.k()..].iter().sum()
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalue, eigenvector)` pairs sorted by descending
/// eigenvalue (ties keep diagonal order). Each eigenvector's
/// largest-magnitude entry is made positive.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> Result<Vec<(f64, Vec<f64>)>, AnalysisError> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(AnalysisError::InvalidInput("matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if matrix[i][j] != matrix[j][i] {
                return Err(AnalysisError::InvalidInput(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let frobenius: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let tolerance = (f64::EPSILON * frobenius).powi(2);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= tolerance {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    Ok(order
        .into_iter()
        .map(|j| {
            let mut vec: Vec<f64> = v.iter().map(|row| row[j]).collect();
            let pivot = vec.iter().enumerate().fold(0, |best, (i, x)| if x.abs() > vec[best].abs() { i } else { best });
            if vec[pivot] < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            (a[j][j], vec)
        })
        .collect())
}

/// Fits `k` principal components to the rows of `features`.
///
/// Rows are put in a canonical order before any summation so that the
/// result does not depend on the order the samples were supplied in.
pub fn fit_pca(features: &FeatureMatrix, k: usize) -> Result<PcaResult, AnalysisError> {
    let (n, dim) = (features.len(), features.dim());
    if n < 2 {
        return Err(AnalysisError::InvalidInput(format!("PCA needs at least 2 rows, got {n}")));
    }
    let max = (n - 1).min(dim);
    if k == 0 || k > max {
        return Err(AnalysisError::TooManyComponents { k, max });
    }
    let mut rows: Vec<&Vec<f64>> = features.rows().iter().collect();
    rows.sort_by(|x, y| {
        x.iter().zip(y.iter()).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });

    let mean: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let denom = (n - 1) as f64;
    let mut cov: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            (0..dim)
                .map(|j| if j < i { 0.0 } else { centered.iter().map(|r| r[i] * r[j]).sum::<f64>() / denom })
                .collect()
        })
        .collect();
    for i in 0..dim {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let total_variance: f64 = (0..dim).map(|i| cov[i][i]).sum();
    if total_variance <= 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }

    let pairs = jacobi_eigen(&cov)?;
    let all_variances: Vec<f64> = pairs.iter().map(|(l, _)| l.max(0.0)).collect();
    let components: Vec<Vec<f64>> = pairs.into_iter().take(k).map(|(_, v)| v).collect();
    Ok(PcaResult {
        mean,
        components,
        explained_variance: all_variances[..k].to_vec(),
        all_variances,
        total_variance,
        source: features.source(),
    })
}

/// Coordinates `(x − mean)·components` of each row.
pub fn project(rows: &[Vec<f64>], pca: &PcaResult) -> Result<Vec<Vec<f64>>, AnalysisError> {
    if let Some(bad) = rows.iter().find(|r| r.len() != pca.dim()) {
        return Err(AnalysisError::DimensionMismatch { expected: pca.dim(), got: bad.len() });
    }
    Ok(rows
        .par_iter()
        .map(|r| {
            pca.components
                .iter()
                .map(|c| c.iter().zip(r.iter().zip(&pca.mean)).map(|(w, (x, m))| w * (x - m)).sum())
                .collect()
        })
        .collect())
}

/// Maps projected coordinates back to feature space.
pub fn reconstruct(coords: &[Vec<f64>], pca: &PcaResult) -> Result<Vec<Vec<f64>>, AnalysisError> {
    if let Some(bad) = coords.iter().find(|c| c.len() != pca.k()) {
        return Err(AnalysisError::DimensionMismatch { expected: pca.k(), got: bad.len() });
    }
    Ok(coords
        .iter()
        .map(|c| {
            let mut x = pca.mean.clone();
            for (t, comp) in c.iter().zip(&pca.components) {
                x.iter_mut().zip(comp).for_each(|(xi, ci)| *xi += t * ci);
            }
            x
        })
        .collect())
}
