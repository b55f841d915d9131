//! Behavioral analyses of real or simulated choices: simulation from model
//! predictions, regret, horizon choice curves, information seeking, and
//! indifference points.

mod curves;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{hybrid_regressors, HybridPriors, KalmanBelief};
use crate::error::{Error, Result};
use crate::numeric::median;
use crate::readout::TestPrediction;
use crate::task::{ChoiceTrial, Payload};

pub use curves::{
    fit_choice_curve, indifference_points, informative_choice_rate, ChoiceCurveFit,
    IndifferencePoint, InformativeRates, RateCell, CURVE_WEIGHT_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SimulationMode {
    /// Bernoulli draws from a generator seeded with `seed`.
    Sample { seed: u64 },
    /// Option 1 iff p exceeds the median of the evaluation set. A prediction
    /// equal to the median picks option 1 when the median is at least 0.5.
    MedianThreshold,
}

/// Simulated choices (1 or 2) for `probabilities` of option 1.
pub fn simulate_choices(probabilities: &[f64], mode: SimulationMode) -> Result<Vec<u8>> {
    if probabilities.is_empty() {
        return Err(Error::Config("cannot simulate from an empty prediction set".into()));
    }
    if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Data(format!("prediction {p} outside [0, 1]")));
    }
    Ok(match mode {
        SimulationMode::Sample { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            probabilities
                .iter()
                .map(|&p| if rng.random_bool(p) { 1 } else { 2 })
                .collect()
        }
        SimulationMode::MedianThreshold => {
            let m = median(probabilities).expect("non-empty");
            probabilities
                .iter()
                .map(|&p| if p > m || (p == m && m >= 0.5) { 1 } else { 2 })
                .collect()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulatedChoice {
    pub trial_id: String,
    pub fold: usize,
    pub choice: u8,
}

/// Simulates from cross-validated test predictions. Median thresholds are
/// computed per fold and the results pooled; sampling uses one generator over
/// all predictions in report order.
pub fn simulate_from_predictions(
    predictions: &[TestPrediction],
    mode: SimulationMode,
) -> Result<Vec<SimulatedChoice>> {
    let choices = match mode {
        SimulationMode::Sample { .. } => {
            let p: Vec<f64> = predictions.iter().map(|p| p.p_choice_1).collect();
            simulate_choices(&p, mode)?
        }
        SimulationMode::MedianThreshold => {
            let mut out = vec![0u8; predictions.len()];
            let mut folds: Vec<usize> = predictions.iter().map(|p| p.fold).collect();
            folds.sort_unstable();
            folds.dedup();
            for fold in folds {
                let rows: Vec<usize> = (0..predictions.len())
                    .filter(|&i| predictions[i].fold == fold)
                    .collect();
                let p: Vec<f64> = rows.iter().map(|&i| predictions[i].p_choice_1).collect();
                for (&i, c) in rows.iter().zip(simulate_choices(&p, mode)?) {
                    out[i] = c;
                }
            }
            out
        }
    };
    Ok(predictions
        .iter()
        .zip(choices)
        .map(|(p, choice)| SimulatedChoice {
            trial_id: p.trial_id.clone(),
            fold: p.fold,
            choice,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRegret {
    pub trial_id: String,
    pub regret: f64,
    /// Horizon trials without generating means are scored against posterior
    /// mean estimates.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub trials: Vec<TrialRegret>,
    pub mean: f64,
    pub standard_error: f64,
    pub approximate_count: usize,
}

/// Expected rewards of options 1 and 2, and whether they are estimates.
fn expected_rewards(trial: &ChoiceTrial, priors: &HybridPriors) -> Result<([f64; 2], bool)> {
    match &trial.payload {
        Payload::Description { option1, option2 } => {
            if option1.outcomes.is_empty() || option2.outcomes.is_empty() {
                return Err(Error::Data(format!(
                    "trial {}: gamble without outcomes",
                    trial.trial_id
                )));
            }
            Ok(([option1.expected_value(), option2.expected_value()], false))
        }
        Payload::Horizon(state) => match state.generating_means {
            Some(means) => Ok((means, false)),
            None => {
                let belief = state
                    .observations
                    .iter()
                    .fold(KalmanBelief::new(priors), |b, o| {
                        crate::baselines::kalman_update(&b, o.machine, o.reward)
                    });
                debug_assert_eq!(
                    belief.means[0] - belief.means[1],
                    hybrid_regressors(state, priors).v
                );
                Ok((belief.means, true))
            }
        },
        Payload::ExperientialSymbolic(es) => {
            if es.s_option.outcomes.is_empty() {
                return Err(Error::Data(format!(
                    "trial {}: S-option without outcomes",
                    trial.trial_id
                )));
            }
            Ok(([2.0 * es.e_win_probability - 1.0, es.s_option.expected_value()], false))
        }
    }
}

/// Regret of `choices[i]` on `trials[i]`: the best expected reward minus that
/// of the chosen option. Posterior means under `priors` stand in for unknown
/// horizon-task means.
pub fn compute_regret(
    trials: &[ChoiceTrial],
    choices: &[u8],
    priors: &HybridPriors,
) -> Result<RegretSummary> {
    if trials.len() != choices.len() {
        return Err(Error::Shape {
            expected: format!("{} choices", trials.len()),
            actual: format!("{}", choices.len()),
        });
    }
    let mut out = Vec::with_capacity(trials.len());
    for (trial, &choice) in trials.iter().zip(choices) {
        if choice != 1 && choice != 2 {
            return Err(Error::Data(format!(
                "trial {}: choice {choice} is not 1 or 2",
                trial.trial_id
            )));
        }
        let (ev, approximate) = expected_rewards(trial, priors)?;
        out.push(TrialRegret {
            trial_id: trial.trial_id.clone(),
            regret: ev[0].max(ev[1]) - ev[usize::from(choice - 1)],
            approximate,
        });
    }
    let n = out.len() as f64;
    let mean = if out.is_empty() {
        0.0
    } else {
        out.iter().map(|r| r.regret).sum::<f64>() / n
    };
    let standard_error = if out.len() > 1 {
        let var = out.iter().map(|r| (r.regret - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(RegretSummary {
        approximate_count: out.iter().filter(|r| r.approximate).count(),
        trials: out,
        mean,
        standard_error,
    })
}
