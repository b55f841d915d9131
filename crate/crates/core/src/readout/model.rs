use std::collections::BTreeMap;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{binomial_nll, sigmoid, softplus};

/// A linear readout: `p(choice = 1) = σ(τ⁻¹ · (x·(w + b_participant) + c))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    /// Per-participant weight deviations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_effects: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_temperature: Option<f64>,
}

impl ReadoutModel {
    pub fn zeros(dim: usize, alpha: f64) -> Self {
        Self {
            weights: vec![0.0; dim],
            intercept: 0.0,
            alpha,
            random_effects: None,
            inverse_temperature: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn temperature_factor(&self) -> f64 {
        self.inverse_temperature.unwrap_or(1.0)
    }

    fn effect(&self, participant: Option<&str>) -> Option<&[f64]> {
        let effects = self.random_effects.as_ref()?;
        effects.get(participant?).map(Vec::as_slice)
    }

    /// Logit of option 1, temperature included. Participants without a fitted
    /// deviation score with the fixed weights alone.
    pub fn logit(&self, x: ArrayView1<'_, f64>, participant: Option<&str>) -> f64 {
        let mut eta = self.intercept;
        match self.effect(participant) {
            Some(b) => {
                for ((xi, wi), bi) in x.iter().zip(&self.weights).zip(b) {
                    eta += xi * (wi + bi);
                }
            }
            None => {
                for (xi, wi) in x.iter().zip(&self.weights) {
                    eta += xi * wi;
                }
            }
        }
        self.temperature_factor() * eta
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(data.dim())?;
        Ok(data
            .x
            .rows()
            .into_iter()
            .zip(&data.participants)
            .map(|(row, p)| sigmoid(self.logit(row, p.as_deref())))
            .collect())
    }

    /// Unpenalized negative log-likelihood of the recorded choices.
    pub fn data_nll(&self, data: &Dataset) -> Result<f64> {
        Ok(self.row_nll(data)?.iter().sum())
    }

    pub fn row_nll(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(data.dim())?;
        Ok(data
            .x
            .rows()
            .into_iter()
            .zip(&data.participants)
            .zip(data.ones.iter().zip(&data.twos))
            .map(|((row, p), (&ones, &twos))| binomial_nll(self.logit(row, p.as_deref()), ones, twos))
            .collect())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::Shape {
                expected: format!("dimension {}", self.dim()),
                actual: format!("dimension {dim}"),
            });
        }
        if let Some(effects) = &self.random_effects {
            if let Some((p, b)) = effects.iter().find(|(_, b)| b.len() != dim) {
                return Err(Error::Shape {
                    expected: format!("random effect of dimension {dim}"),
                    actual: format!("participant {p} with dimension {}", b.len()),
                });
            }
        }
        Ok(())
    }
}

/// Gradient of the penalized objective, shaped like the model's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutGradient {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub random_effects: BTreeMap<String, Vec<f64>>,
}

/// Parameter packing: `[w (dim), c (if fitted), b_0 (dim), b_1 (dim), …]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub dim: usize,
    pub intercept: bool,
    pub groups: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.dim + usize::from(self.intercept) + self.groups * self.dim
    }

    fn effects_start(&self) -> usize {
        self.dim + usize::from(self.intercept)
    }

    pub fn effect_range(&self, g: usize) -> std::ops::Range<usize> {
        let start = self.effects_start() + g * self.dim;
        start..start + self.dim
    }
}

/// Penalized repeat-weighted logistic loss over one dataset.
///
/// The ridge term is `(α·W/2)(‖w‖² + s·Σ‖b_p‖²)` where `W` is the number of
/// recorded choices in the dataset and `s` the random-effect penalty scale; the
/// intercept is not penalized.
pub(crate) struct Objective<'a> {
    pub data: &'a Dataset,
    pub layout: Layout,
    /// Group index of each row, `None` for rows scored with fixed weights only.
    pub groups: Vec<Option<usize>>,
    pub alpha: f64,
    pub effect_penalty_scale: f64,
    pub inverse_temperature: f64,
    weight_total: f64,
}

impl<'a> Objective<'a> {
    pub fn new(
        data: &'a Dataset,
        layout: Layout,
        groups: Vec<Option<usize>>,
        alpha: f64,
        effect_penalty_scale: f64,
        inverse_temperature: f64,
    ) -> Self {
        Self {
            weight_total: data.total_weight(),
            data,
            layout,
            groups,
            alpha,
            effect_penalty_scale,
            inverse_temperature,
        }
    }

    pub fn penalty_strength(&self) -> f64 {
        self.alpha * self.weight_total
    }

    pub fn value_and_gradient(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let Layout { dim, intercept, .. } = self.layout;
        let tau = self.inverse_temperature;
        let w = &params[..dim];
        let c = if intercept { params[dim] } else { 0.0 };
        grad.iter_mut().for_each(|g| *g = 0.0);

        let mut nll = 0.0;
        for (i, row) in self.data.x.rows().into_iter().enumerate() {
            let row = row.as_slice().expect("standard layout");
            let effect = self.groups[i].map(|g| self.layout.effect_range(g));
            let mut eta = c;
            match &effect {
                Some(range) => {
                    let b = &params[range.clone()];
                    for k in 0..dim {
                        eta += row[k] * (w[k] + b[k]);
                    }
                }
                None => {
                    for k in 0..dim {
                        eta += row[k] * w[k];
                    }
                }
            }
            let s = tau * eta;
            let (ones, twos) = (self.data.ones[i], self.data.twos[i]);
            if ones > 0.0 {
                nll += ones * softplus(-s);
            }
            if twos > 0.0 {
                nll += twos * softplus(s);
            }
            // d nll / d eta
            let r = tau * ((ones + twos) * sigmoid(s) - ones);
            for k in 0..dim {
                grad[k] += r * row[k];
            }
            if intercept {
                grad[dim] += r;
            }
            if let Some(range) = effect {
                for (g, x) in grad[range].iter_mut().zip(row) {
                    *g += r * x;
                }
            }
        }

        let lambda = self.penalty_strength();
        if lambda > 0.0 {
            let mut penalty = 0.0;
            for k in 0..dim {
                penalty += w[k] * w[k];
                grad[k] += lambda * w[k];
            }
            let scaled = lambda * self.effect_penalty_scale;
            let mut effect_penalty = 0.0;
            for g in 0..self.layout.groups {
                for k in self.layout.effect_range(g) {
                    effect_penalty += params[k] * params[k];
                    grad[k] += scaled * params[k];
                }
            }
            nll += 0.5 * lambda * penalty + 0.5 * scaled * effect_penalty;
        }
        nll
    }

    pub fn pack(&self, model: &ReadoutModel, names: &[String]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.len()];
        out[..self.layout.dim].copy_from_slice(&model.weights);
        if self.layout.intercept {
            out[self.layout.dim] = model.intercept;
        }
        if let Some(effects) = &model.random_effects {
            for (g, name) in names.iter().enumerate() {
                if let Some(b) = effects.get(name) {
                    out[self.layout.effect_range(g)].copy_from_slice(b);
                }
            }
        }
        out
    }
}

pub(crate) fn unpack(
    layout: Layout,
    params: &[f64],
    names: &[String],
    alpha: f64,
    random_effects: bool,
) -> ReadoutModel {
    let dim = layout.dim;
    ReadoutModel {
        weights: params[..dim].to_vec(),
        intercept: if layout.intercept { params[dim] } else { 0.0 },
        alpha,
        random_effects: random_effects.then(|| {
            names
                .iter()
                .enumerate()
                .map(|(g, name)| (name.clone(), params[layout.effect_range(g)].to_vec()))
                .collect()
        }),
        inverse_temperature: None,
    }
}

/// Group assignment of each row given the participant names that carry effects.
pub(crate) fn assign_groups(data: &Dataset, names: &[String]) -> Vec<Option<usize>> {
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    data.participants
        .iter()
        .map(|p| p.as_deref().and_then(|p| index.get(p).copied()))
        .collect()
}

/// Penalized objective value and exact gradient of `model` on `data`.
///
/// Rows whose participant has no entry in `model.random_effects` contribute
/// through the fixed weights only.
pub fn nll_and_grad(model: &ReadoutModel, data: &Dataset) -> Result<(f64, ReadoutGradient)> {
    model.check_dim(data.dim())?;
    let names: Vec<String> = model
        .random_effects
        .as_ref()
        .map(|e| e.keys().cloned().collect())
        .unwrap_or_default();
    let layout = Layout {
        dim: model.dim(),
        intercept: true,
        groups: names.len(),
    };
    let objective = Objective::new(
        data,
        layout,
        assign_groups(data, &names),
        model.alpha,
        1.0,
        model.temperature_factor(),
    );
    let params = objective.pack(model, &names);
    let mut grad = vec![0.0; params.len()];
    let value = objective.value_and_gradient(&params, &mut grad);
    let g = unpack(layout, &grad, &names, model.alpha, true);
    Ok((
        value,
        ReadoutGradient {
            weights: g.weights,
            intercept: g.intercept,
            random_effects: g.random_effects.unwrap_or_default(),
        },
    ))
}
