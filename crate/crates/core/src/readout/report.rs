use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One hyperparameter setting evaluated on a fold's validation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_temperature: Option<f64>,
    pub validation_nll: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub chosen_alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_inverse_temperature: Option<f64>,
    pub train_nll: f64,
    pub validation_nll: f64,
    pub test_nll: f64,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub iterations: usize,
    pub converged: bool,
    pub grid: Vec<GridPoint>,
    /// Fitted coefficients, recorded for low-dimensional models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPrediction {
    pub trial_id: String,
    pub fold: usize,
    pub participant_id: Option<String>,
    pub p_choice_1: f64,
    pub nll: f64,
}

/// Readout fit on the shared training tasks for one α (transfer protocol).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingFit {
    pub alpha: f64,
    pub objective: f64,
    pub train_nll: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub folds: Vec<FoldRecord>,
    /// Sum of the per-fold test NLLs, in fold order.
    pub aggregate_test_nll: f64,
    pub total_test_choices: f64,
    pub participant_test_nll: BTreeMap<String, f64>,
    pub predictions: Vec<TestPrediction>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub training_fits: Vec<TrainingFit>,
}

impl FitReport {
    pub(crate) fn assemble(
        model: impl Into<String>,
        folds: Vec<FoldRecord>,
        predictions: Vec<TestPrediction>,
        total_test_choices: f64,
    ) -> Self {
        let aggregate_test_nll = folds.iter().map(|f| f.test_nll).sum();
        let mut participant_test_nll = BTreeMap::new();
        for p in &predictions {
            if let Some(id) = &p.participant_id {
                *participant_test_nll.entry(id.clone()).or_insert(0.0) += p.nll;
            }
        }
        Self {
            model: model.into(),
            folds,
            aggregate_test_nll,
            total_test_choices,
            participant_test_nll,
            predictions,
            training_fits: Vec::new(),
        }
    }

    pub fn all_converged(&self) -> bool {
        self.folds.iter().all(|f| f.converged)
    }
}
