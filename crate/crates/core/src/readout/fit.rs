use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::model::{assign_groups, unpack, Layout, Objective, ReadoutModel};
use crate::error::{Error, Result};
use crate::optim::{minimize, LbfgsOptions, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    #[serde(default)]
    pub lbfgs: LbfgsOptions,
    #[serde(default = "yes")]
    pub fit_intercept: bool,
    /// Multiplier on the ridge penalty of the random effects relative to the
    /// fixed weights.
    #[serde(default = "one")]
    pub effect_penalty_scale: f64,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lbfgs: LbfgsOptions::default(),
            fit_intercept: true,
            effect_penalty_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub model: ReadoutModel,
    /// Penalized objective at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub gradient_norm: f64,
    /// Objective after every accepted optimizer step.
    pub trace: Vec<f64>,
}

impl FitOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

/// Participants present in `data`, sorted.
pub fn participant_roster(data: &Dataset) -> Vec<String> {
    data.participants
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Fits the penalized logistic readout by LBFGS.
///
/// With `random_effects`, every participant in `data` receives a weight
/// deviation. `init` supplies a warm start; deviations for participants absent
/// from it start at zero.
pub fn fit_logistic(
    data: &Dataset,
    alpha: f64,
    random_effects: bool,
    init: Option<&ReadoutModel>,
    options: &FitOptions,
) -> Result<FitOutcome> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    if data.is_empty() {
        return Err(Error::Config("cannot fit on an empty dataset".into()));
    }
    let names = if random_effects {
        if let Some(i) = data.participants.iter().position(Option::is_none) {
            return Err(Error::Data(format!(
                "trial {} has no participant_id, required for random effects",
                data.ids[i]
            )));
        }
        participant_roster(data)
    } else {
        Vec::new()
    };
    let layout = Layout {
        dim: data.dim(),
        intercept: options.fit_intercept,
        groups: names.len(),
    };
    let objective = Objective::new(
        data,
        layout,
        assign_groups(data, &names),
        alpha,
        options.effect_penalty_scale,
        1.0,
    );
    let x0 = match init {
        Some(model) => {
            if model.dim() != data.dim() {
                return Err(Error::Shape {
                    expected: format!("initial model of dimension {}", data.dim()),
                    actual: format!("dimension {}", model.dim()),
                });
            }
            objective.pack(model, &names)
        }
        None => vec![0.0; layout.len()],
    };
    let outcome = minimize(
        |p, g| objective.value_and_gradient(p, g),
        x0,
        &options.lbfgs,
    )?;
    Ok(FitOutcome {
        model: unpack(layout, &outcome.x, &names, alpha, random_effects),
        objective: outcome.value,
        iterations: outcome.iterations,
        termination: outcome.termination,
        gradient_norm: outcome.gradient_norm,
        trace: outcome.trace,
    })
}
