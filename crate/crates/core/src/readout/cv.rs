use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::fit::{fit_logistic, FitOptions};
use super::model::ReadoutModel;
use super::report::{FitReport, FoldRecord, GridPoint, TestPrediction};
use crate::embedding::{EmbeddingStore, FeatureScaler, ScalerScope};
use crate::error::{Error, Result};
use crate::numeric::sigmoid;
use crate::task::{ChoiceTrial, FoldPlan};

pub const DEFAULT_ALPHA_GRID: [f64; 10] = [0.0, 0.0001, 0.0003, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    /// Feature standardization; `None` fits on raw features.
    #[serde(default = "default_scaler")]
    pub scaler: Option<ScalerScope>,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default = "yes")]
    pub warm_start: bool,
    /// Store each fold's chosen coefficients in the report.
    #[serde(default)]
    pub record_coefficients: bool,
}

fn default_alpha_grid() -> Vec<f64> {
    DEFAULT_ALPHA_GRID.to_vec()
}

fn default_scaler() -> Option<ScalerScope> {
    Some(ScalerScope::PerFold)
}

fn yes() -> bool {
    true
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            alpha_grid: default_alpha_grid(),
            scaler: default_scaler(),
            fit: FitOptions::default(),
            warm_start: true,
            record_coefficients: false,
        }
    }
}

impl CvOptions {
    pub(crate) fn check(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(Error::Config("alpha_grid must not be empty".into()));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::Config(format!("alpha_grid contains invalid value {a}")));
        }
        Ok(())
    }
}

/// Index of the grid point with the lowest validation NLL. Ties go to the
/// smaller α, then to the larger inverse temperature.
pub fn select_best(points: &[GridPoint]) -> Option<usize> {
    let key = |p: &GridPoint| (p.validation_nll, p.alpha, -p.inverse_temperature.unwrap_or(1.0));
    (0..points.len()).min_by(|&a, &b| {
        let (ka, kb) = (key(&points[a]), key(&points[b]));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
    })
}

pub(crate) struct FoldData {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Splits `data` by one fold and standardizes it.
pub(crate) fn fold_data(
    data: &Dataset,
    fold: &crate::task::Fold,
    scaler: Option<&FeatureScaler>,
    scope: Option<ScalerScope>,
) -> Result<FoldData> {
    let mut out = FoldData {
        train: data.subset(&data.positions(&fold.train)?),
        validation: data.subset(&data.positions(&fold.validation)?),
        test: data.subset(&data.positions(&fold.test)?),
    };
    let fitted;
    let scaler = match (scope, scaler) {
        (None, _) => None,
        (Some(ScalerScope::Global), Some(s)) => Some(s),
        (Some(_), _) => {
            fitted = FeatureScaler::fit(out.train.x.view())?;
            Some(&fitted)
        }
    };
    if let Some(s) = scaler {
        s.transform_in_place(&mut out.train.x)?;
        s.transform_in_place(&mut out.validation.x)?;
        s.transform_in_place(&mut out.test.x)?;
    }
    Ok(out)
}

pub(crate) fn score_test(
    model: &ReadoutModel,
    test: &Dataset,
    fold: usize,
) -> Result<(f64, Vec<TestPrediction>)> {
    let nll = model.row_nll(test)?;
    let predictions = test
        .x
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| TestPrediction {
            trial_id: test.ids[i].clone(),
            fold,
            participant_id: test.participants[i].clone(),
            p_choice_1: sigmoid(model.logit(row, test.participants[i].as_deref())),
            nll: nll[i],
        })
        .collect();
    Ok((nll.iter().sum(), predictions))
}

fn run_fold(
    index: usize,
    data: &Dataset,
    plan: &FoldPlan,
    global: Option<&FeatureScaler>,
    options: &CvOptions,
    random_effects: bool,
) -> Result<(FoldRecord, Vec<TestPrediction>, f64)> {
    let fold = &plan.folds[index];
    let FoldData {
        train,
        validation,
        test,
    } = fold_data(data, fold, global, options.scaler)?;

    let mut grid = Vec::with_capacity(options.alpha_grid.len());
    let mut models: Vec<ReadoutModel> = Vec::with_capacity(options.alpha_grid.len());
    let mut iterations = 0;
    for &alpha in &options.alpha_grid {
        let init = if options.warm_start { models.last() } else { None };
        let outcome = fit_logistic(&train, alpha, random_effects, init, &options.fit)?;
        iterations += outcome.iterations;
        grid.push(GridPoint {
            alpha,
            inverse_temperature: None,
            validation_nll: outcome.model.data_nll(&validation)?,
            iterations: outcome.iterations,
            converged: outcome.converged(),
        });
        models.push(outcome.model);
    }
    let best = select_best(&grid).expect("non-empty grid");
    let model = &models[best];
    let (test_nll, predictions) = score_test(model, &test, index)?;
    let coefficients = options.record_coefficients.then(|| {
        let mut c = model.weights.clone();
        c.push(model.intercept);
        c
    });
    let record = FoldRecord {
        fold: index,
        chosen_alpha: grid[best].alpha,
        chosen_inverse_temperature: None,
        train_nll: model.data_nll(&train)?,
        validation_nll: grid[best].validation_nll,
        test_nll,
        train_size: train.len(),
        validation_size: validation.len(),
        test_size: test.len(),
        iterations,
        converged: grid.iter().all(|g| g.converged),
        grid,
        coefficients,
    };
    Ok((record, predictions, test.total_weight()))
}

/// Nested cross-validation on a prepared dataset: per fold, one fit per α on
/// the training rows, α chosen on validation, the chosen model scored on test.
///
/// Folds run in parallel; results are collected in fold order, so the report is
/// independent of scheduling.
pub fn cross_validate(
    data: &Dataset,
    plan: &FoldPlan,
    options: &CvOptions,
    random_effects: bool,
    model_name: &str,
) -> Result<FitReport> {
    options.check()?;
    let global = match options.scaler {
        Some(ScalerScope::Global) => Some(FeatureScaler::fit(data.x.view())?),
        _ => None,
    };
    let results: Vec<(FoldRecord, Vec<TestPrediction>, f64)> = (0..plan.folds.len())
        .into_par_iter()
        .map(|k| run_fold(k, data, plan, global.as_ref(), options, random_effects))
        .collect::<Result<_>>()?;
    let mut folds = Vec::with_capacity(results.len());
    let mut predictions = Vec::new();
    let mut total = 0.0;
    for (record, preds, weight) in results {
        total += weight;
        folds.push(record);
        predictions.extend(preds);
    }
    Ok(FitReport::assemble(model_name, folds, predictions, total))
}

/// Fixed-effects readout under nested cross-validation.
pub fn nested_cv_fit(
    store: &EmbeddingStore,
    trials: &[ChoiceTrial],
    plan: &FoldPlan,
    options: &CvOptions,
) -> Result<FitReport> {
    let data = Dataset::from_store(store, trials)?;
    cross_validate(&data, plan, options, false, "centaur")
}

/// Readout with per-participant weight deviations. Every trial needs a
/// participant id; participants absent from a fold's training rows score with
/// the fixed weights alone.
pub fn fit_random_effects(
    store: &EmbeddingStore,
    trials: &[ChoiceTrial],
    plan: &FoldPlan,
    options: &CvOptions,
) -> Result<FitReport> {
    if let Some(t) = trials.iter().find(|t| t.participant_id.is_none()) {
        return Err(Error::Data(format!(
            "trial {} has no participant_id, required for random effects",
            t.trial_id
        )));
    }
    let data = Dataset::from_store(store, trials)?;
    cross_validate(&data, plan, options, true, "centaur-random-effects")
}
