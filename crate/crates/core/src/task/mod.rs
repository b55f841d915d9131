//! Canonical trial records for the three choice paradigms.
//!
//! A [`ChoiceTrial`] is one decision: a description gamble pair, a horizon-task
//! state, or an experiential–symbolic comparison. Trials carry aggregate choice
//! counts so that problem-level datasets (many people, one record per problem)
//! and per-participant datasets share one representation.

mod folds;
mod horizon;
pub mod io;
mod validate;

use serde::{Deserialize, Serialize};

pub use folds::{make_fold_plan, Fold, FoldPlan, DEFAULT_FRACTIONS};
pub use horizon::{tag_horizon_conditions, HorizonTag, InfoCondition, FORCED_OBSERVATIONS};
pub use validate::{validate_dataset, ValidationReport, Violation};

/// Probability-sum tolerance for gamble outcomes.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    Description,
    Horizon,
    ExperientialSymbolic,
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Paradigm::Description => "Description",
            Paradigm::Horizon => "Horizon",
            Paradigm::ExperientialSymbolic => "ExperientialSymbolic",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub value: f64,
    pub probability: f64,
}

impl Outcome {
    pub fn new(value: f64, probability: f64) -> Self {
        Self { value, probability }
    }
}

/// A described gamble: outcomes listed in presentation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GambleOption {
    pub outcomes: Vec<Outcome>,
}

impl GambleOption {
    pub fn new(outcomes: Vec<Outcome>) -> Self {
        Self { outcomes }
    }

    /// Builds a gamble from `(value, probability)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Self::new(pairs.iter().map(|&(v, p)| Outcome::new(v, p)).collect())
    }

    pub fn expected_value(&self) -> f64 {
        self.outcomes.iter().map(|o| o.value * o.probability).sum()
    }

    pub fn probability_sum(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    /// Invariant violations, if any.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.outcomes.is_empty() {
            out.push("gamble has no outcomes".to_string());
            return out;
        }
        for o in &self.outcomes {
            if !o.value.is_finite() {
                out.push(format!("non-finite outcome value {}", o.value));
            }
            if !(0.0..=1.0).contains(&o.probability) {
                out.push(format!("outcome probability {} outside [0, 1]", o.probability));
            }
        }
        let sum = self.probability_sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            out.push(format!("outcome probabilities sum to {sum}, not 1"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub machine: u8,
    pub reward: f64,
}

impl Observation {
    pub fn new(machine: u8, reward: f64) -> Self {
        Self { machine, reward }
    }
}

/// State of a horizon-task game at one free choice.
///
/// `observations` holds the four forced observations followed by the outcomes of
/// any earlier free choices in the same game. `horizon` counts the free choices
/// still to be made including the current one, and `trial_index` is the 0-based
/// position of the current choice among the free choices, so the game's horizon
/// is `horizon + trial_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonState {
    pub observations: Vec<Observation>,
    pub horizon: u32,
    pub trial_index: u32,
    /// Latent generating means of machines 1 and 2, when the dataset records them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generating_means: Option<[f64; 2]>,
}

impl HorizonState {
    pub fn game_horizon(&self) -> u32 {
        self.horizon + self.trial_index
    }

    pub fn forced(&self) -> &[Observation] {
        let n = FORCED_OBSERVATIONS.min(self.observations.len());
        &self.observations[..n]
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for o in &self.observations {
            if o.machine != 1 && o.machine != 2 {
                out.push(format!("observation names machine {}", o.machine));
            }
            if !o.reward.is_finite() {
                out.push(format!("non-finite reward {}", o.reward));
            }
        }
        if self.horizon < 1 {
            out.push("horizon must be at least 1".to_string());
        }
        if self.observations.len() < FORCED_OBSERVATIONS {
            out.push(format!(
                "{} observations, fewer than the {FORCED_OBSERVATIONS} forced ones",
                self.observations.len()
            ));
            return out;
        }
        let ones = self.forced().iter().filter(|o| o.machine == 1).count();
        if !(1..=3).contains(&ones) {
            out.push(format!(
                "forced machine counts ({ones}, {}) are not (2,2), (1,3) or (3,1)",
                FORCED_OBSERVATIONS - ones
            ));
        }
        let expected_len = FORCED_OBSERVATIONS + self.trial_index as usize;
        if self.observations.len() != expected_len {
            out.push(format!(
                "free choice {} expects {expected_len} observations, found {}",
                self.trial_index,
                self.observations.len()
            ));
        }
        if self.horizon >= 1 && !matches!(self.game_horizon(), 1 | 6) {
            out.push(format!("game horizon {} is not 1 or 6", self.game_horizon()));
        }
        out
    }
}

/// Choice between an experienced option (machine 1) and a described one (machine 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperientialSymbolicTrial {
    pub e_option_history: Vec<f64>,
    pub s_option: GambleOption,
    pub e_win_probability: f64,
    pub s_win_probability: f64,
}

impl ExperientialSymbolicTrial {
    /// Builds a trial whose S-option pays +1 with `s_win_probability`, else −1.
    pub fn new(e_option_history: Vec<f64>, e_win_probability: f64, s_win_probability: f64) -> Self {
        Self {
            e_option_history,
            s_option: GambleOption::from_pairs(&[
                (-1.0, 1.0 - s_win_probability),
                (1.0, s_win_probability),
            ]),
            e_win_probability,
            s_win_probability,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.e_option_history.is_empty() {
            out.push("experienced history is empty".to_string());
        }
        if self.e_option_history.iter().any(|&r| r != 1.0 && r != -1.0) {
            out.push("experienced rewards must be -1 or +1".to_string());
        }
        out.extend(self.s_option.problems());
        if self.s_option.outcomes.iter().any(|o| o.value != 1.0 && o.value != -1.0) {
            out.push("described option outcomes must be -1 or +1".to_string());
        }
        for (name, p) in [
            ("e_win_probability", self.e_win_probability),
            ("s_win_probability", self.s_win_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("{name} {p} outside [0, 1]"));
            }
        }
        out
    }
}

/// Paradigm-specific content of a trial. The variant must agree with
/// [`ChoiceTrial::paradigm`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Description {
        option1: GambleOption,
        option2: GambleOption,
    },
    Horizon(HorizonState),
    ExperientialSymbolic(ExperientialSymbolicTrial),
}

impl Payload {
    pub fn paradigm(&self) -> Paradigm {
        match self {
            Payload::Description { .. } => Paradigm::Description,
            Payload::Horizon(_) => Paradigm::Horizon,
            Payload::ExperientialSymbolic(_) => Paradigm::ExperientialSymbolic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceTrial {
    pub trial_id: String,
    pub participant_id: Option<String>,
    pub paradigm: Paradigm,
    pub payload: Payload,
    pub human_choice: u8,
    pub repeat_count: u32,
    pub choice_count_1: u32,
}

impl ChoiceTrial {
    /// A single recorded choice by one participant.
    pub fn single(
        trial_id: impl Into<String>,
        participant_id: Option<String>,
        payload: Payload,
        choice: u8,
    ) -> Self {
        Self {
            trial_id: trial_id.into(),
            participant_id,
            paradigm: payload.paradigm(),
            payload,
            human_choice: choice,
            repeat_count: 1,
            choice_count_1: u32::from(choice == 1),
        }
    }

    /// Same trial with its recorded choice replaced, e.g. by a simulated one.
    pub fn with_choice(&self, choice: u8) -> Self {
        let mut out = self.clone();
        out.human_choice = choice;
        out.repeat_count = 1;
        out.choice_count_1 = u32::from(choice == 1);
        out
    }

    pub fn horizon(&self) -> Option<&HorizonState> {
        match &self.payload {
            Payload::Horizon(h) => Some(h),
            _ => None,
        }
    }

    pub fn experiential_symbolic(&self) -> Option<&ExperientialSymbolicTrial> {
        match &self.payload {
            Payload::ExperientialSymbolic(t) => Some(t),
            _ => None,
        }
    }

    /// Number of recorded choices of option 2.
    pub fn choice_count_2(&self) -> u32 {
        self.repeat_count.saturating_sub(self.choice_count_1)
    }
}
