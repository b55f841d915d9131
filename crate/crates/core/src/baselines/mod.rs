//! Reference models: random guessing, the temperature-calibrated log-probability
//! readout, a lapse-rate wrapper for deterministic models, and the Kalman-filter
//! hybrid model of horizon-task exploration.

mod hybrid;

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial_nll, binomial_nll_from_probability, sigmoid};
use crate::readout::{
    select_best, FitReport, FoldRecord, GridPoint, TestPrediction, DEFAULT_TEMPERATURE_GRID,
};
use crate::task::{ChoiceTrial, FoldPlan};

pub use hybrid::{
    fit_hybrid, fit_hybrid_coefficients, hybrid_dataset, hybrid_regressors, kalman_update,
    HybridOptions, HybridPriors, HybridRegressors, KalmanBelief, VARIANCE_FLOOR,
};

/// Negative log-likelihood of guessing uniformly: `(Σ repeat_count)·ln 2`.
pub fn random_baseline_nll(trials: &[ChoiceTrial]) -> f64 {
    let choices: u64 = trials.iter().map(|t| u64::from(t.repeat_count)).sum();
    choices as f64 * std::f64::consts::LN_2
}

/// The random model laid out as a cross-validated report, so it can be compared
/// fold by fold and participant by participant.
pub fn random_baseline_report(trials: &[ChoiceTrial], plan: &FoldPlan) -> Result<FitReport> {
    let index = trial_index(trials);
    let mut folds = Vec::with_capacity(plan.folds.len());
    let mut predictions = Vec::new();
    let mut total = 0.0;
    for (k, fold) in plan.folds.iter().enumerate() {
        let nll_of = |ids: &[String]| -> Result<f64> {
            Ok(random_baseline_nll(&lookup(&index, trials, ids)?))
        };
        let test = lookup(&index, trials, &fold.test)?;
        for t in &test {
            let nll = f64::from(t.repeat_count) * std::f64::consts::LN_2;
            total += f64::from(t.repeat_count);
            predictions.push(TestPrediction {
                trial_id: t.trial_id.clone(),
                fold: k,
                participant_id: t.participant_id.clone(),
                p_choice_1: 0.5,
                nll,
            });
        }
        folds.push(FoldRecord {
            fold: k,
            chosen_alpha: 0.0,
            chosen_inverse_temperature: None,
            train_nll: nll_of(&fold.train)?,
            validation_nll: nll_of(&fold.validation)?,
            test_nll: random_baseline_nll(&test),
            train_size: fold.train.len(),
            validation_size: fold.validation.len(),
            test_size: test.len(),
            iterations: 0,
            converged: true,
            grid: Vec::new(),
            coefficients: None,
        });
    }
    Ok(FitReport::assemble("random", folds, predictions, total))
}

fn trial_index(trials: &[ChoiceTrial]) -> HashMap<&str, usize> {
    trials
        .iter()
        .enumerate()
        .map(|(i, t)| (t.trial_id.as_str(), i))
        .collect()
}

fn lookup(index: &HashMap<&str, usize>, trials: &[ChoiceTrial], ids: &[String]) -> Result<Vec<ChoiceTrial>> {
    ids.iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|&i| trials[i].clone())
                .ok_or_else(|| Error::Data(format!("fold plan names unknown trial {id}")))
        })
        .collect()
}

/// Log-probabilities a language model assigns to the two option tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobRecord {
    pub trial_id: String,
    pub logp_1: f64,
    pub logp_2: f64,
}

pub fn read_logprobs(path: impl AsRef<Path>) -> Result<Vec<LogprobRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogprobRecord = serde_json::from_str(&line).map_err(|e| {
            Error::Format(format!("{}:{}: {e}", path.display(), n + 1))
        })?;
        if !(record.logp_1.is_finite() && record.logp_2.is_finite()) {
            return Err(Error::Format(format!(
                "{}:{}: non-finite log-probability",
                path.display(),
                n + 1
            )));
        }
        out.push(record);
    }
    Ok(out)
}

/// One scalar feature per trial with its choice counts.
struct ScalarData {
    ids: Vec<String>,
    feature: Vec<f64>,
    ones: Vec<f64>,
    twos: Vec<f64>,
    participants: Vec<Option<String>>,
}

impl ScalarData {
    fn rows(&self, ids: &[String]) -> Result<Vec<usize>> {
        let index: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Data(format!("fold plan names unknown trial {id}")))
            })
            .collect()
    }

    fn weight(&self, rows: &[usize]) -> f64 {
        rows.iter().map(|&i| self.ones[i] + self.twos[i]).sum()
    }
}

/// Cross-validates a one-parameter model `p = prob(θ, feature)` with θ chosen
/// from `grid` on each fold's validation trials.
fn scalar_cv(
    data: &ScalarData,
    plan: &FoldPlan,
    grid: &[f64],
    name: &str,
    as_temperature: bool,
    prob: impl Fn(f64, f64) -> (f64, Option<f64>) + Sync,
) -> Result<FitReport> {
    if grid.is_empty() {
        return Err(Error::Config("parameter grid must not be empty".into()));
    }
    // `prob` returns either a probability or, when exact, a logit.
    let row_nll = |theta: f64, i: usize| match prob(theta, data.feature[i]) {
        (_, Some(logit)) => binomial_nll(logit, data.ones[i], data.twos[i]),
        (p, None) => binomial_nll_from_probability(p, data.ones[i], data.twos[i]),
    };
    let results = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| {
            let train = data.rows(&fold.train)?;
            let validation = data.rows(&fold.validation)?;
            let test = data.rows(&fold.test)?;
            let points: Vec<GridPoint> = grid
                .iter()
                .map(|&theta| GridPoint {
                    alpha: if as_temperature { 0.0 } else { theta },
                    inverse_temperature: as_temperature.then_some(theta),
                    validation_nll: validation.iter().map(|&i| row_nll(theta, i)).sum(),
                    iterations: 0,
                    converged: true,
                })
                .collect();
            let best = select_best(&points).expect("non-empty grid");
            let theta = grid[best];
            let predictions: Vec<TestPrediction> = test
                .iter()
                .map(|&i| {
                    let (p, logit) = prob(theta, data.feature[i]);
                    TestPrediction {
                        trial_id: data.ids[i].clone(),
                        fold: k,
                        participant_id: data.participants[i].clone(),
                        p_choice_1: logit.map_or(p, sigmoid),
                        nll: row_nll(theta, i),
                    }
                })
                .collect();
            let record = FoldRecord {
                fold: k,
                chosen_alpha: points[best].alpha,
                chosen_inverse_temperature: points[best].inverse_temperature,
                train_nll: train.iter().map(|&i| row_nll(theta, i)).sum(),
                validation_nll: points[best].validation_nll,
                test_nll: predictions.iter().map(|p| p.nll).sum(),
                train_size: train.len(),
                validation_size: validation.len(),
                test_size: test.len(),
                iterations: 0,
                converged: true,
                grid: points,
                coefficients: Some(vec![theta]),
            };
            Ok((record, predictions, data.weight(&test)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut folds = Vec::new();
    let mut predictions = Vec::new();
    let mut total = 0.0;
    for (record, preds, weight) in results {
        total += weight;
        folds.push(record);
        predictions.extend(preds);
    }
    Ok(FitReport::assemble(name, folds, predictions, total))
}

/// Log-probability baseline: `p(choice = 1) = σ(τ⁻¹·(logp_1 − logp_2))`, with τ⁻¹
/// chosen per fold on validation trials. An empty grid means the default
/// 0.05 … 1.0 grid.
pub fn fit_logprob_baseline(
    records: &[LogprobRecord],
    trials: &[ChoiceTrial],
    plan: &FoldPlan,
    temperature_grid: &[f64],
) -> Result<FitReport> {
    let grid = if temperature_grid.is_empty() {
        &DEFAULT_TEMPERATURE_GRID[..]
    } else {
        temperature_grid
    };
    if let Some(t) = grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Config(format!("temperature_grid contains invalid value {t}")));
    }
    let by_id: HashMap<&str, &LogprobRecord> =
        records.iter().map(|r| (r.trial_id.as_str(), r)).collect();
    let missing: Vec<&str> = trials
        .iter()
        .filter(|t| !by_id.contains_key(t.trial_id.as_str()))
        .map(|t| t.trial_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "no log-probabilities for {} trial(s): {}",
            missing.len(),
            missing.iter().take(20).copied().collect::<Vec<_>>().join(", ")
        )));
    }
    let data = ScalarData {
        ids: trials.iter().map(|t| t.trial_id.clone()).collect(),
        feature: trials
            .iter()
            .map(|t| {
                let r = by_id[t.trial_id.as_str()];
                r.logp_1 - r.logp_2
            })
            .collect(),
        ones: trials.iter().map(|t| f64::from(t.choice_count_1)).collect(),
        twos: trials.iter().map(|t| f64::from(t.choice_count_2())).collect(),
        participants: trials.iter().map(|t| t.participant_id.clone()).collect(),
    };
    scalar_cv(&data, plan, grid, "logprob", true, |tau, d| (0.0, Some(tau * d)))
}

/// Default lapse-rate grid 0.00, 0.01, …, 1.00.
pub fn default_lapse_grid() -> Vec<f64> {
    (0..=100).map(|i| f64::from(i) / 100.0).collect()
}

/// Wraps a deterministic model: with probability `ε` the choice is a coin flip,
/// otherwise the model's prediction, so `p(predicted) = 1 − ε/2`. ε is chosen
/// per fold on validation trials; the chosen value is recorded in `chosen_alpha`
/// and `coefficients`.
pub fn fit_error_model(
    predicted_choices: &HashMap<String, u8>,
    trials: &[ChoiceTrial],
    plan: &FoldPlan,
    lapse_grid: &[f64],
    name: &str,
) -> Result<FitReport> {
    if let Some(e) = lapse_grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::Config(format!("lapse rate {e} outside [0, 1]")));
    }
    let mut feature = Vec::with_capacity(trials.len());
    for t in trials {
        match predicted_choices.get(&t.trial_id) {
            Some(1) => feature.push(1.0),
            Some(2) => feature.push(0.0),
            Some(c) => {
                return Err(Error::Data(format!(
                    "trial {}: predicted choice {c} is not 1 or 2",
                    t.trial_id
                )))
            }
            None => {
                return Err(Error::Data(format!("no predicted choice for trial {}", t.trial_id)))
            }
        }
    }
    let data = ScalarData {
        ids: trials.iter().map(|t| t.trial_id.clone()).collect(),
        feature,
        ones: trials.iter().map(|t| f64::from(t.choice_count_1)).collect(),
        twos: trials.iter().map(|t| f64::from(t.choice_count_2())).collect(),
        participants: trials.iter().map(|t| t.participant_id.clone()).collect(),
    };
    scalar_cv(&data, plan, lapse_grid, name, false, |eps, is_one| {
        let p = is_one * (1.0 - eps) + eps / 2.0;
        (p, None)
    })
}
