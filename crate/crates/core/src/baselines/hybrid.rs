use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::{cross_validate, fit_logistic, CvOptions, Dataset, FitOptions, FitOutcome, FitReport};
use crate::task::{ChoiceTrial, FoldPlan, HorizonState};

/// Lower bound on posterior variances, reached only with noiseless observations.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridPriors {
    pub prior_mean: f64,
    pub prior_variance: f64,
    pub noise_variance: f64,
}

impl Default for HybridPriors {
    fn default() -> Self {
        Self {
            prior_mean: 50.0,
            prior_variance: 100.0,
            noise_variance: 64.0,
        }
    }
}

/// Independent Gaussian beliefs about the mean reward of machines 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanBelief {
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub noise_variance: f64,
    /// Set once any variance has been clamped to [`VARIANCE_FLOOR`].
    pub variance_floored: bool,
}

impl KalmanBelief {
    pub fn new(priors: &HybridPriors) -> Self {
        Self {
            means: [priors.prior_mean; 2],
            variances: [priors.prior_variance; 2],
            noise_variance: priors.noise_variance,
            variance_floored: false,
        }
    }
}

/// Conjugate update of one machine's belief after observing `reward`.
///
/// # Panics
/// If `machine` is not 1 or 2.
pub fn kalman_update(belief: &KalmanBelief, machine: u8, reward: f64) -> KalmanBelief {
    assert!(machine == 1 || machine == 2, "machine must be 1 or 2, got {machine}");
    let m = usize::from(machine - 1);
    let mut next = *belief;
    let v = belief.variances[m];
    let gain = v / (v + belief.noise_variance);
    next.means[m] = belief.means[m] + gain * (reward - belief.means[m]);
    let posterior = (1.0 - gain) * v;
    if posterior < VARIANCE_FLOOR {
        next.variances[m] = VARIANCE_FLOOR;
        next.variance_floored = true;
    } else {
        next.variances[m] = posterior;
    }
    next
}

/// Exploitation, directed-exploration and random-exploration regressors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridRegressors {
    /// `μ₁ − μ₂`
    pub v: f64,
    /// `√v₁ − √v₂`
    pub ru: f64,
    /// `V / √(v₁ + v₂)`
    pub vtu: f64,
}

pub fn hybrid_regressors(state: &HorizonState, priors: &HybridPriors) -> HybridRegressors {
    let belief = state
        .observations
        .iter()
        .fold(KalmanBelief::new(priors), |b, o| kalman_update(&b, o.machine, o.reward));
    let [m1, m2] = belief.means;
    let [v1, v2] = belief.variances;
    let v = m1 - m2;
    HybridRegressors {
        v,
        ru: v1.sqrt() - v2.sqrt(),
        vtu: v / (v1 + v2).sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridOptions {
    #[serde(default)]
    pub priors: HybridPriors,
    /// Separate (V, RU, VTU) coefficients for horizon-1 and horizon-6 games.
    #[serde(default)]
    pub horizon_specific: bool,
    #[serde(default = "unpenalized")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "no_intercept")]
    pub fit: FitOptions,
}

fn unpenalized() -> Vec<f64> {
    vec![0.0]
}

fn no_intercept() -> FitOptions {
    FitOptions {
        fit_intercept: false,
        ..FitOptions::default()
    }
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self {
            priors: HybridPriors::default(),
            horizon_specific: false,
            alpha_grid: unpenalized(),
            fit: no_intercept(),
        }
    }
}

/// Regressor rows for horizon trials: `[V, RU, VTU]`, or with
/// `horizon_specific` the same three masked by horizon 1 then by horizon 6.
pub fn hybrid_dataset(trials: &[ChoiceTrial], options: &HybridOptions) -> Result<Dataset> {
    let cols = if options.horizon_specific { 6 } else { 3 };
    let mut x = Array2::zeros((trials.len(), cols));
    for (i, t) in trials.iter().enumerate() {
        let state = t.horizon().ok_or_else(|| Error::Paradigm {
            trial_id: t.trial_id.clone(),
            expected: "horizon".into(),
            found: t.paradigm.to_string(),
        })?;
        let r = hybrid_regressors(state, &options.priors);
        let offset = if options.horizon_specific && state.game_horizon() != 1 { 3 } else { 0 };
        x[[i, offset]] = r.v;
        x[[i, offset + 1]] = r.ru;
        x[[i, offset + 2]] = r.vtu;
    }
    Dataset::from_features(trials, x)
}

/// Hybrid model under the readout's cross-validation protocol, with raw
/// (unstandardized) regressors. Fold coefficients are recorded in the report.
pub fn fit_hybrid(trials: &[ChoiceTrial], plan: &FoldPlan, options: &HybridOptions) -> Result<FitReport> {
    let data = hybrid_dataset(trials, options)?;
    let cv = CvOptions {
        alpha_grid: options.alpha_grid.clone(),
        scaler: None,
        fit: options.fit,
        warm_start: true,
        record_coefficients: true,
    };
    cross_validate(&data, plan, &cv, false, "hybrid")
}

/// Hybrid coefficients fit on all of `trials` at penalty `alpha`.
pub fn fit_hybrid_coefficients(
    trials: &[ChoiceTrial],
    options: &HybridOptions,
    alpha: f64,
) -> Result<FitOutcome> {
    let data = hybrid_dataset(trials, options)?;
    fit_logistic(&data, alpha, false, None, &options.fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::Observation;

    #[test]
    fn equal_variance_gives_half_gain() {
        let priors = HybridPriors {
            prior_mean: 10.0,
            prior_variance: 4.0,
            noise_variance: 4.0,
        };
        let b = kalman_update(&KalmanBelief::new(&priors), 2, 30.0);
        assert_eq!(b.means, [10.0, 20.0]);
        assert_eq!(b.variances, [4.0, 2.0]);
    }

    #[test]
    fn noiseless_update_hits_the_floor() {
        let priors = HybridPriors {
            noise_variance: 0.0,
            ..HybridPriors::default()
        };
        let b = kalman_update(&KalmanBelief::new(&priors), 1, 37.0);
        assert_eq!(b.means[0], 37.0);
        assert_eq!(b.variances[0], VARIANCE_FLOOR);
        assert!(b.variance_floored);
    }

    #[test]
    fn no_observations_give_zero_regressors() {
        let state = HorizonState {
            observations: vec![],
            horizon: 6,
            trial_index: 0,
            generating_means: None,
        };
        let r = hybrid_regressors(&state, &HybridPriors::default());
        assert_eq!((r.v, r.ru, r.vtu), (0.0, 0.0, 0.0));
    }

    #[test]
    fn interleaving_does_not_matter() {
        let obs = [(1, 40.0), (2, 55.0), (1, 61.0), (2, 47.0), (2, 52.0)];
        let state = |order: &[usize]| HorizonState {
            observations: order.iter().map(|&i| Observation::new(obs[i].0, obs[i].1)).collect(),
            horizon: 1,
            trial_index: 1,
            generating_means: None,
        };
        let p = HybridPriors::default();
        let a = hybrid_regressors(&state(&[0, 1, 2, 3, 4]), &p);
        let b = hybrid_regressors(&state(&[1, 3, 0, 4, 2]), &p);
        assert!((a.v - b.v).abs() < 1e-12);
        assert!((a.ru - b.ru).abs() < 1e-12);
    }
}
