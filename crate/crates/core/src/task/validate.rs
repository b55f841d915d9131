use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{ChoiceTrial, Paradigm, Payload};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    pub per_paradigm: BTreeMap<Paradigm, usize>,
    pub participants: Vec<String>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every trial invariant and collects violations as data.
pub fn validate_dataset(trials: &[ChoiceTrial]) -> ValidationReport {
    let mut report = ValidationReport {
        total: trials.len(),
        ..Default::default()
    };
    let mut roster = BTreeSet::new();
    let mut seen = HashSet::with_capacity(trials.len());

    for trial in trials {
        *report.per_paradigm.entry(trial.paradigm).or_default() += 1;
        if let Some(p) = &trial.participant_id {
            roster.insert(p.clone());
        }
        let mut flag = |message: String| {
            report.violations.push(Violation {
                trial_id: trial.trial_id.clone(),
                message,
            })
        };

        if !seen.insert(trial.trial_id.as_str()) {
            flag("duplicate trial_id".to_string());
        }
        if trial.payload.paradigm() != trial.paradigm {
            flag(format!(
                "payload is {} but paradigm is {}",
                trial.payload.paradigm(),
                trial.paradigm
            ));
        }
        let payload_problems = match &trial.payload {
            Payload::Description { option1, option2 } => {
                let mut out: Vec<String> = option1
                    .problems()
                    .into_iter()
                    .map(|m| format!("option 1: {m}"))
                    .collect();
                out.extend(option2.problems().into_iter().map(|m| format!("option 2: {m}")));
                out
            }
            Payload::Horizon(state) => state.problems(),
            Payload::ExperientialSymbolic(es) => es.problems(),
        };
        for message in payload_problems {
            flag(message);
        }
        if trial.human_choice != 1 && trial.human_choice != 2 {
            flag(format!("human_choice {} is not 1 or 2", trial.human_choice));
        }
        if trial.repeat_count < 1 {
            flag("repeat_count must be at least 1".to_string());
        }
        if trial.choice_count_1 > trial.repeat_count {
            flag(format!(
                "choice_count_1 {} exceeds repeat_count {}",
                trial.choice_count_1, trial.repeat_count
            ));
        }
        if trial.repeat_count == 1
            && matches!(trial.human_choice, 1 | 2)
            && trial.choice_count_1 != u32::from(trial.human_choice == 1)
        {
            flag("choice_count_1 disagrees with human_choice for a single choice".to_string());
        }
    }
    report.participants = roster.into_iter().collect();
    report
}
