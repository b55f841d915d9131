//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! Near the optimum the decrease of a step can fall below the resolution of
//! the objective. Steps whose value change is within [`ROUNDING_FLOOR`]
//! (relative) are then accepted on the approximate Wolfe conditions of Hager
//! and Zhang, so accepted values may rise by at most that much.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub history: usize,
    pub max_iterations: usize,
    /// Stop once the gradient's infinity norm is at or below this value.
    pub gradient_tolerance: f64,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            history: 10,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// No step along steepest descent satisfied the Armijo condition; usually the
    /// objective is flat to machine precision.
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective value at the start and after every accepted step.
    /// Non-increasing up to [`ROUNDING_FLOOR`] relative.
    pub trace: Vec<f64>,
}

impl LbfgsOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

/// Relative objective change treated as rounding noise by the line search.
pub const ROUNDING_FLOOR: f64 = 1e-10;

const CURVATURE: f64 = 0.9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H g` for the current inverse-Hessian estimate.
fn search_direction(memory: &VecDeque<Pair>, grad: &[f64]) -> Vec<f64> {
    let mut q = grad.to_vec();
    if memory.is_empty() {
        let scale = 1.0 / dot(grad, grad).sqrt().max(1.0);
        return q.iter().map(|g| -g * scale).collect();
    }
    let mut alphas = Vec::with_capacity(memory.len());
    for pair in memory.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let last = memory.back().expect("non-empty");
    let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for (pair, a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Minimizes `f`, which returns the objective and writes the gradient into its
/// second argument.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, options: &LbfgsOptions) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = f(&x, &mut grad);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Optimizer(format!(
            "non-finite objective {value} at the starting point"
        )));
    }
    let mut trace = vec![value];
    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(options.history);
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut iterations = 0;

    let termination = loop {
        if inf_norm(&grad) <= options.gradient_tolerance {
            break Termination::GradientTolerance;
        }
        if iterations >= options.max_iterations {
            break Termination::MaxIterations;
        }

        let mut direction = search_direction(&memory, &grad);
        let mut slope = dot(&direction, &grad);
        if !(slope < 0.0) {
            memory.clear();
            direction = search_direction(&memory, &grad);
            slope = dot(&direction, &grad);
        }

        let mut accepted = None;
        let mut last_value = value;
        loop {
            let mut step = 1.0;
            for _ in 0..=options.max_backtracks {
                for i in 0..n {
                    trial[i] = x[i] + step * direction[i];
                }
                let v = f(&trial, &mut trial_grad);
                last_value = v;
                if v.is_finite() && v <= value + options.armijo * step * slope {
                    accepted = Some(v);
                    break;
                }
                if v.is_finite() && (v - value).abs() <= ROUNDING_FLOOR * value.abs().max(1.0) {
                    // The change is below what the objective resolves; decide
                    // from the directional derivative at the trial point.
                    let trial_slope = dot(&trial_grad, &direction);
                    if trial_slope <= (1.0 - 2.0 * options.armijo) * -slope
                        && trial_slope >= CURVATURE * slope
                    {
                        accepted = Some(v);
                        break;
                    }
                }
                step *= 0.5;
            }
            if accepted.is_some() || memory.is_empty() {
                break;
            }
            // Retry from steepest descent before giving up.
            memory.clear();
            direction = search_direction(&memory, &grad);
            slope = dot(&direction, &grad);
        }

        let Some(new_value) = accepted else {
            if !last_value.is_finite() {
                return Err(Error::Optimizer(format!(
                    "objective non-finite along the search direction after {iterations} iterations \
                     (value {value}, gradient norm {:.3e}, |x|∞ {:.3e})",
                    inf_norm(&grad),
                    inf_norm(&x)
                )));
            }
            break Termination::LineSearchStalled;
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
        if inf_norm(&s) == 0.0 {
            break Termination::LineSearchStalled;
        }
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if memory.len() == options.history {
                memory.pop_front();
            }
            memory.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        value = new_value;
        trace.push(value);
        iterations += 1;
    };

    Ok(LbfgsOutcome {
        gradient_norm: inf_norm(&grad),
        x,
        value,
        iterations,
        termination,
        trace,
    })
}
