use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::EmbeddingStore;
use crate::error::{Error, Result};

/// Where standardization statistics come from during cross-validation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerScope {
    /// Fit on each fold's training rows and applied to its validation and test rows.
    #[default]
    PerFold,
    /// Fit once on every row of the dataset.
    Global,
}

/// Per-dimension z-scoring with population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    pub standard_deviations: Vec<f64>,
    /// Dimensions with zero variance on the fitting rows; their deviation is set to 1.
    pub constant_dimensions: Vec<usize>,
}

impl FeatureScaler {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::Config("cannot fit a scaler on zero rows".into()));
        }
        let means = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let mut standard_deviations = vec![0.0; x.ncols()];
        for row in x.rows() {
            for ((acc, &v), &m) in standard_deviations.iter_mut().zip(row).zip(&means) {
                *acc += (v - m) * (v - m);
            }
        }
        let mut constant_dimensions = Vec::new();
        for (j, (sd, &m)) in standard_deviations.iter_mut().zip(&means).enumerate() {
            *sd = (*sd / n as f64).sqrt();
            if *sd <= 1e-12 * m.abs().max(1.0) {
                *sd = 1.0;
                constant_dimensions.push(j);
            }
        }
        Ok(Self {
            means,
            standard_deviations,
            constant_dimensions,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_in_place(&self, x: &mut Array2<f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::Shape {
                expected: format!("{} columns", self.dim()),
                actual: format!("{} columns", x.ncols()),
            });
        }
        for mut row in x.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.means).zip(&self.standard_deviations) {
                *v = (*v - m) / s;
            }
        }
        Ok(())
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = x.to_owned();
        self.transform_in_place(&mut out)?;
        Ok(out)
    }
}

pub fn fit_scaler<S: AsRef<str>>(store: &EmbeddingStore, trial_ids: &[S]) -> Result<FeatureScaler> {
    if trial_ids.is_empty() {
        return Err(Error::Config("scaler fitting subset is empty".into()));
    }
    FeatureScaler::fit(store.matrix(trial_ids)?.view())
}

/// Standardizes every row of `store`.
pub fn apply_scaler(scaler: &FeatureScaler, store: &EmbeddingStore) -> Result<EmbeddingStore> {
    if scaler.dim() != store.dim() {
        return Err(Error::Shape {
            expected: format!("dimension {}", scaler.dim()),
            actual: format!("dimension {}", store.dim()),
        });
    }
    let values = store
        .values()
        .chunks(store.dim())
        .flat_map(|row| {
            row.iter()
                .zip(&scaler.means)
                .zip(&scaler.standard_deviations)
                .map(|((&v, &m), &s)| ((f64::from(v) - m) / s) as f32)
        })
        .collect();
    EmbeddingStore::new(
        store.dim(),
        store.ids().to_vec(),
        values,
        store.provenance().to_string(),
    )
}
