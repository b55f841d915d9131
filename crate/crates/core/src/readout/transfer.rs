use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{score_test, select_best, DEFAULT_ALPHA_GRID};
use super::dataset::Dataset;
use super::fit::{fit_logistic, FitOptions};
use super::model::ReadoutModel;
use super::report::{FitReport, FoldRecord, GridPoint, TrainingFit};
use crate::embedding::{EmbeddingStore, FeatureScaler, ScalerScope};
use crate::error::{Error, Result};
use crate::numeric::binomial_nll;
use crate::task::{make_fold_plan, ChoiceTrial, FoldPlan};

/// Inverse temperatures 0.05, 0.10, …, 1.00.
pub const DEFAULT_TEMPERATURE_GRID: [f64; 20] = [
    0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85,
    0.9, 0.95, 1.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferOptions {
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_temperature_grid")]
    pub temperature_grid: Vec<f64>,
    /// `PerFold` fits the scaler on the training tasks, `Global` on training
    /// and hold-out rows together.
    #[serde(default = "default_scaler")]
    pub scaler: Option<ScalerScope>,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default = "yes")]
    pub warm_start: bool,
}

fn default_alpha_grid() -> Vec<f64> {
    DEFAULT_ALPHA_GRID.to_vec()
}

fn default_temperature_grid() -> Vec<f64> {
    DEFAULT_TEMPERATURE_GRID.to_vec()
}

fn default_scaler() -> Option<ScalerScope> {
    Some(ScalerScope::PerFold)
}

fn yes() -> bool {
    true
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self {
            alpha_grid: default_alpha_grid(),
            temperature_grid: default_temperature_grid(),
            scaler: default_scaler(),
            fit: FitOptions::default(),
            warm_start: true,
        }
    }
}

/// Hold-out split: `fold_count` test blocks tiling the hold-out trials; the
/// remaining hold-out trials of each fold select (α, τ⁻¹).
pub fn holdout_fold_plan(trials: &[ChoiceTrial], fold_count: usize, seed: u64) -> Result<FoldPlan> {
    if fold_count == 0 {
        return Err(Error::Config("fold_count must be positive".into()));
    }
    let ids: Vec<String> = trials.iter().map(|t| t.trial_id.clone()).collect();
    let test = 1.0 / fold_count as f64;
    make_fold_plan(&ids, fold_count, [0.0, 1.0 - test, test], seed)
}

/// Fits the readout on the concatenated training tasks once per α, then for
/// each hold-out fold chooses (α, τ⁻¹) on the fold's non-test hold-out trials
/// and scores `σ(τ⁻¹·(x·w + c))` on its test trials.
pub fn transfer_fit(
    train_tasks: &[(&EmbeddingStore, &[ChoiceTrial])],
    holdout: (&EmbeddingStore, &[ChoiceTrial]),
    plan: &FoldPlan,
    options: &TransferOptions,
) -> Result<FitReport> {
    if train_tasks.is_empty() {
        return Err(Error::Config("transfer needs at least one training task".into()));
    }
    if options.alpha_grid.is_empty() || options.temperature_grid.is_empty() {
        return Err(Error::Config("alpha and temperature grids must not be empty".into()));
    }
    if let Some(t) = options.temperature_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Config(format!("temperature_grid contains invalid value {t}")));
    }
    let parts = train_tasks
        .iter()
        .map(|(store, trials)| Dataset::from_store(store, trials))
        .collect::<Result<Vec<_>>>()?;
    let mut train = Dataset::concat(&parts)?;
    let mut target = Dataset::from_store(holdout.0, holdout.1)?;
    if target.dim() != train.dim() {
        return Err(Error::Shape {
            expected: format!("hold-out dimension {}", train.dim()),
            actual: format!("dimension {}", target.dim()),
        });
    }
    let scaler = match options.scaler {
        None => None,
        Some(ScalerScope::PerFold) => Some(FeatureScaler::fit(train.x.view())?),
        Some(ScalerScope::Global) => {
            let both = Dataset::concat(&[train.clone(), target.clone()])?;
            Some(FeatureScaler::fit(both.x.view())?)
        }
    };
    if let Some(s) = &scaler {
        s.transform_in_place(&mut train.x)?;
        s.transform_in_place(&mut target.x)?;
    }

    let mut models: Vec<ReadoutModel> = Vec::with_capacity(options.alpha_grid.len());
    let mut training_fits = Vec::with_capacity(options.alpha_grid.len());
    for &alpha in &options.alpha_grid {
        let init = if options.warm_start { models.last() } else { None };
        let outcome = fit_logistic(&train, alpha, false, init, &options.fit)?;
        training_fits.push(TrainingFit {
            alpha,
            objective: outcome.objective,
            train_nll: outcome.model.data_nll(&train)?,
            iterations: outcome.iterations,
            converged: outcome.converged(),
        });
        models.push(outcome.model);
    }
    let train_converged = training_fits.iter().all(|f| f.converged);
    let train_iterations: usize = training_fits.iter().map(|f| f.iterations).sum();

    let results = (0..plan.folds.len())
        .into_par_iter()
        .map(|k| {
            let fold = &plan.folds[k];
            let mut select_ids = fold.train.clone();
            select_ids.extend(fold.validation.iter().cloned());
            let validation = target.subset(&target.positions(&select_ids)?);
            let test = target.subset(&target.positions(&fold.test)?);

            let mut grid = Vec::new();
            let mut candidates = Vec::new();
            for (a, model) in models.iter().enumerate() {
                let logits: Vec<f64> = validation
                    .x
                    .rows()
                    .into_iter()
                    .map(|row| model.logit(row, None))
                    .collect();
                for &tau in &options.temperature_grid {
                    let nll: f64 = logits
                        .iter()
                        .zip(validation.ones.iter().zip(&validation.twos))
                        .map(|(eta, (&ones, &twos))| binomial_nll(tau * eta, ones, twos))
                        .sum();
                    grid.push(GridPoint {
                        alpha: model.alpha,
                        inverse_temperature: Some(tau),
                        validation_nll: nll,
                        iterations: training_fits[a].iterations,
                        converged: training_fits[a].converged,
                    });
                    candidates.push((a, tau));
                }
            }
            let best = select_best(&grid).expect("non-empty grid");
            let (a, tau) = candidates[best];
            let mut model = models[a].clone();
            model.inverse_temperature = Some(tau);
            let (test_nll, predictions) = score_test(&model, &test, k)?;
            let record = FoldRecord {
                fold: k,
                chosen_alpha: model.alpha,
                chosen_inverse_temperature: Some(tau),
                train_nll: training_fits[a].train_nll,
                validation_nll: grid[best].validation_nll,
                test_nll,
                train_size: train.len(),
                validation_size: validation.len(),
                test_size: test.len(),
                iterations: train_iterations,
                converged: train_converged,
                grid,
                coefficients: None,
            };
            Ok((record, predictions, test.total_weight()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut folds = Vec::with_capacity(results.len());
    let mut predictions = Vec::new();
    let mut total = 0.0;
    for (record, preds, weight) in results {
        total += weight;
        folds.push(record);
        predictions.extend(preds);
    }
    let mut report = FitReport::assemble("centaur-transfer", folds, predictions, total);
    report.training_fits = training_fits;
    Ok(report)
}
