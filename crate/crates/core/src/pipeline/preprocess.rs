//! Standardize -> PCA -> min-max to `[0, 1]`, fitted on the training split.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Sample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPlan {
    pub means: Vec<f64>,
    /// Population standard deviations; zero-variance features get 1.
    pub stds: Vec<f64>,
    /// Principal axes, one row per retained component, in descending
    /// eigenvalue order. Each row's largest-magnitude entry is positive.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the standardized training covariance (all of them).
    pub eigenvalues: Vec<f64>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub warnings: Vec<String>,
}

fn column_stats(rows: &[Sample], n_features: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut means = vec![0.0; n_features];
    for r in rows {
        for (m, x) in means.iter_mut().zip(&r.features) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; n_features];
    for r in rows {
        for ((v, x), m) in vars.iter_mut().zip(&r.features).zip(&means) {
            *v += (x - m) * (x - m);
        }
    }
    let stds = vars.into_iter().map(|v| (v / n).sqrt()).collect();
    (means, stds)
}

/// Fits the three-stage transform on `train`, keeping `n_components`
/// principal components.
pub fn fit_preprocess(train: &Dataset, n_components: usize) -> Result<PreprocessPlan> {
    let d = train.n_features();
    if train.is_empty() {
        return Err(Error::Dataset("cannot fit preprocessing on an empty split".into()));
    }
    if n_components == 0 || n_components > d {
        return Err(Error::InvalidParameter(format!(
            "requested {n_components} components from {d} features"
        )));
    }
    let (means, mut stds) = column_stats(&train.rows, d);
    let mut warnings = Vec::new();
    for (i, s) in stds.iter_mut().enumerate() {
        if *s == 0.0 {
            warnings.push(format!("feature {:?} has zero variance; scale set to 1", train.feature_names[i]));
            *s = 1.0;
        }
    }
    let n = train.len();
    let z = DMatrix::from_fn(n, d, |r, c| (train.rows[r].features[c] - means[c]) / stds[c]);
    let cov = z.transpose() * &z / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let top = eigenvalues[0].max(0.0);
    let rank = eigenvalues.iter().filter(|&&v| v > 1e-10 * top.max(f64::MIN_POSITIVE)).count();
    if n_components > rank {
        return Err(Error::InvalidParameter(format!(
            "requested {n_components} components but the training data has rank {rank}"
        )));
    }
    let components: Vec<Vec<f64>> = order[..n_components]
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let mut plan = PreprocessPlan {
        means,
        stds,
        components,
        eigenvalues,
        mins: vec![f64::INFINITY; n_components],
        maxs: vec![f64::NEG_INFINITY; n_components],
        warnings,
    };
    for r in &train.rows {
        for (j, p) in plan.project(&r.features).into_iter().enumerate() {
            plan.mins[j] = plan.mins[j].min(p);
            plan.maxs[j] = plan.maxs[j].max(p);
        }
    }
    Ok(plan)
}

impl PreprocessPlan {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Fraction of total variance captured by each retained component.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        self.eigenvalues[..self.n_components()].iter().map(|v| v / total).collect()
    }

    fn project(&self, features: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|axis| {
                axis.iter()
                    .zip(features)
                    .zip(self.means.iter().zip(&self.stds))
                    .map(|((a, x), (m, s))| a * (x - m) / s)
                    .sum()
            })
            .collect()
    }

    /// Transforms one raw feature vector; outputs are clamped to `[0, 1]`.
    pub fn transform(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.means.len() {
            return Err(Error::Dataset(format!(
                "expected {} raw features, found {}",
                self.means.len(),
                features.len()
            )));
        }
        Ok(self
            .project(features)
            .into_iter()
            .enumerate()
            .map(|(j, p)| {
                let span = self.maxs[j] - self.mins[j];
                if span > 0.0 {
                    ((p - self.mins[j]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn transform_dataset(&self, data: &Dataset) -> Result<Dataset> {
        let rows = data
            .rows
            .iter()
            .map(|r| {
                Ok(Sample {
                    features: self.transform(&r.features)?,
                    label: r.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let names = (0..self.n_components()).map(|j| format!("pc{j}")).collect();
        Dataset::new(names, rows, format!("{} [preprocessed]", data.provenance))
    }
}
