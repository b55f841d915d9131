use std::collections::BTreeMap;

use nalgebra::DMatrix;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::sigmoid;
use crate::readout::{fit_logistic, Dataset, FitOptions};
use crate::task::{tag_horizon_conditions, ChoiceTrial, InfoCondition};

/// Bound on the absolute value of any curve coefficient; fits that exceed it
/// are treated as separated.
pub const CURVE_WEIGHT_CAP: f64 = 50.0;

struct LogisticFit {
    /// Slopes followed by the intercept.
    coefficients: Vec<f64>,
    standard_errors: Option<Vec<f64>>,
    converged: bool,
    separated: bool,
    degenerate: bool,
}

/// Unpenalized logistic regression of binary `y` (true = event) on the columns
/// of `x` plus an intercept.
fn fit_curve(x: Array2<f64>, y: &[bool]) -> Result<LogisticFit> {
    let n = y.len();
    let degenerate = x.columns().into_iter().any(|c| {
        let first = c[0];
        c.iter().all(|&v| v == first)
    });
    let data = Dataset {
        ids: (0..n).map(|i| i.to_string()).collect(),
        x,
        ones: y.iter().map(|&b| f64::from(u8::from(b))).collect(),
        twos: y.iter().map(|&b| f64::from(u8::from(!b))).collect(),
        participants: vec![None; n],
    };
    let outcome = fit_logistic(&data, 0.0, false, None, &FitOptions::default())?;
    let model = &outcome.model;
    let mut coefficients = model.weights.clone();
    coefficients.push(model.intercept);
    let separated = coefficients.iter().any(|c| c.abs() > CURVE_WEIGHT_CAP);
    for c in &mut coefficients {
        *c = c.clamp(-CURVE_WEIGHT_CAP, CURVE_WEIGHT_CAP);
    }

    let standard_errors = if degenerate || separated {
        None
    } else {
        let k = coefficients.len();
        let mut info = DMatrix::<f64>::zeros(k, k);
        for row in data.x.rows() {
            let mut z: Vec<f64> = row.to_vec();
            z.push(1.0);
            let eta: f64 = z.iter().zip(&coefficients).map(|(a, b)| a * b).sum();
            let p = sigmoid(eta);
            let w = p * (1.0 - p);
            for a in 0..k {
                for b in 0..k {
                    info[(a, b)] += w * z[a] * z[b];
                }
            }
        }
        info.try_inverse()
            .map(|cov| (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect())
    };
    Ok(LogisticFit {
        coefficients,
        standard_errors,
        converged: outcome.converged(),
        separated,
        degenerate,
    })
}

/// Logistic choice curve of one information condition on reward difference,
/// horizon indicator and their product.
///
/// EqualInfo models p(choose machine 2) on `mean₂ − mean₁`; UnequalInfo models
/// p(choose the more informative machine) on `mean_informative − mean_other`,
/// where means are over the forced observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceCurveFit {
    pub condition: InfoCondition,
    pub n_trials: usize,
    pub intercept: f64,
    pub beta_reward_difference: f64,
    pub beta_horizon: f64,
    pub beta_interaction: f64,
    /// Standard errors in the order intercept, reward difference, horizon,
    /// interaction; absent for degenerate or separated fits.
    pub standard_errors: Option<[f64; 4]>,
    pub converged: bool,
    pub separated: bool,
    pub degenerate: bool,
}

/// Fits the choice curve on the first free choices of `condition`. `choices`
/// align with `trials`, which must all be horizon trials.
pub fn fit_choice_curve(
    trials: &[ChoiceTrial],
    choices: &[u8],
    condition: InfoCondition,
) -> Result<ChoiceCurveFit> {
    check_choices(trials, choices)?;
    let tags = tag_horizon_conditions(trials)?;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (tag, &choice) in tags.iter().zip(choices) {
        if !tag.first_free_choice || tag.condition != condition {
            continue;
        }
        let (delta, event) = match tag.more_informative_option {
            None => (-tag.reward_difference, choice == 2),
            Some(1) => (tag.reward_difference, choice == 1),
            Some(_) => (-tag.reward_difference, choice == 2),
        };
        let h = if tag.horizon == 6 { 1.0 } else { 0.0 };
        rows.extend([delta, h, delta * h]);
        y.push(event);
    }
    if y.is_empty() {
        return Err(Error::Data(format!("no first free choices in condition {condition:?}")));
    }
    let x = Array2::from_shape_vec((y.len(), 3), rows).expect("three columns");
    let fit = fit_curve(x, &y)?;
    let c = &fit.coefficients;
    Ok(ChoiceCurveFit {
        condition,
        n_trials: y.len(),
        intercept: c[3],
        beta_reward_difference: c[0],
        beta_horizon: c[1],
        beta_interaction: c[2],
        standard_errors: fit.standard_errors.map(|s| [s[3], s[0], s[1], s[2]]),
        converged: fit.converged,
        separated: fit.separated,
        degenerate: fit.degenerate,
    })
}

fn check_choices(trials: &[ChoiceTrial], choices: &[u8]) -> Result<()> {
    if trials.len() != choices.len() {
        return Err(Error::Shape {
            expected: format!("{} choices", trials.len()),
            actual: format!("{}", choices.len()),
        });
    }
    if let Some((t, c)) = trials.iter().zip(choices).find(|(_, c)| **c != 1 && **c != 2) {
        return Err(Error::Data(format!("trial {}: choice {c} is not 1 or 2", t.trial_id)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub horizon: u32,
    pub n_trials: usize,
    pub rate: Option<f64>,
    pub standard_error: Option<f64>,
}

impl RateCell {
    fn new(horizon: u32, hits: usize, n: usize) -> Self {
        let rate = (n > 0).then(|| hits as f64 / n as f64);
        Self {
            horizon,
            n_trials: n,
            rate,
            standard_error: rate.map(|r| (r * (1.0 - r) / n as f64).sqrt()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n_trials == 0
    }
}

/// Rate of choosing the more informative machine on unequal-information first
/// free choices, per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformativeRates {
    pub horizon_1: RateCell,
    pub horizon_6: RateCell,
    /// `rate(6) − rate(1)` when both cells are populated.
    pub difference: Option<f64>,
    pub difference_standard_error: Option<f64>,
    /// Horizons whose cell has no trials.
    pub empty_cells: Vec<u32>,
}

pub fn informative_choice_rate(trials: &[ChoiceTrial], choices: &[u8]) -> Result<InformativeRates> {
    check_choices(trials, choices)?;
    let tags = tag_horizon_conditions(trials)?;
    let mut counts = [(0usize, 0usize); 2];
    for (tag, &choice) in tags.iter().zip(choices) {
        let Some(informative) = tag.more_informative_option else {
            continue;
        };
        if !tag.first_free_choice {
            continue;
        }
        let cell = &mut counts[usize::from(tag.horizon != 1)];
        cell.1 += 1;
        cell.0 += usize::from(choice == informative);
    }
    let horizon_1 = RateCell::new(1, counts[0].0, counts[0].1);
    let horizon_6 = RateCell::new(6, counts[1].0, counts[1].1);
    let (difference, difference_standard_error) = match (horizon_1.rate, horizon_6.rate) {
        (Some(a), Some(b)) => {
            let se = (horizon_1.standard_error.unwrap().powi(2)
                + horizon_6.standard_error.unwrap().powi(2))
            .sqrt();
            (Some(b - a), Some(se))
        }
        _ => (None, None),
    };
    let empty_cells = [horizon_1, horizon_6]
        .iter()
        .filter(|c| c.is_empty())
        .map(|c| c.horizon)
        .collect();
    Ok(InformativeRates {
        horizon_1,
        horizon_6,
        difference,
        difference_standard_error,
        empty_cells,
    })
}

/// Where the E-option and S-option are chosen equally often, for one E-option
/// win probability. The curve is `p(choose E) = σ(a + b·p_S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndifferencePoint {
    pub e_win_probability: f64,
    pub n_trials: usize,
    pub intercept: Option<f64>,
    pub slope_coefficient: Option<f64>,
    /// `−a/b`, present only when it lies in [0, 1].
    pub s_star: Option<f64>,
    /// Derivative of p(choose E) with respect to p_S at the crossing, `b/4`.
    pub slope_at_parity: Option<f64>,
    /// The curve does not cross 0.5 within [0, 1], or is flat.
    pub censored: bool,
    /// Only one S-option win probability in the group.
    pub unidentifiable: bool,
    pub separated: bool,
}

/// Slopes below this magnitude count as flat.
const FLAT_SLOPE: f64 = 1e-8;

/// One indifference point per distinct E-option win probability, in ascending
/// order. Trials must be experiential–symbolic with choice 1 = E-option.
pub fn indifference_points(trials: &[ChoiceTrial], choices: &[u8]) -> Result<Vec<IndifferencePoint>> {
    check_choices(trials, choices)?;
    let mut groups: BTreeMap<u64, (f64, Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for (t, &choice) in trials.iter().zip(choices) {
        let es = t.experiential_symbolic().ok_or_else(|| Error::Paradigm {
            trial_id: t.trial_id.clone(),
            expected: "experiential-symbolic".into(),
            found: t.paradigm.to_string(),
        })?;
        // Non-negative floats order like their bit patterns.
        let key = (es.e_win_probability + 0.0).to_bits();
        let entry = groups
            .entry(key)
            .or_insert_with(|| (es.e_win_probability, Vec::new(), Vec::new()));
        entry.1.push(es.s_win_probability);
        entry.2.push(choice == 1);
    }
    groups
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(e, p_s, y)| {
            let n = y.len();
            let first = p_s[0];
            if p_s.iter().all(|&p| p == first) {
                return Ok(IndifferencePoint {
                    e_win_probability: e,
                    n_trials: n,
                    intercept: None,
                    slope_coefficient: None,
                    s_star: None,
                    slope_at_parity: None,
                    censored: true,
                    unidentifiable: true,
                    separated: false,
                });
            }
            let x = Array2::from_shape_vec((n, 1), p_s).expect("one column");
            let fit = fit_curve(x, &y)?;
            let (b, a) = (fit.coefficients[0], fit.coefficients[1]);
            let s_star = (b.abs() >= FLAT_SLOPE)
                .then(|| -a / b)
                .filter(|s| (0.0..=1.0).contains(s));
            Ok(IndifferencePoint {
                e_win_probability: e,
                n_trials: n,
                intercept: Some(a),
                slope_coefficient: Some(b),
                s_star,
                slope_at_parity: s_star.map(|_| b / 4.0),
                censored: s_star.is_none(),
                unidentifiable: false,
                separated: fit.separated,
            })
        })
        .collect()
}
