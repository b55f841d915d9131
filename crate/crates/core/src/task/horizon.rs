use serde::{Deserialize, Serialize};

use super::{ChoiceTrial, Paradigm};
use crate::error::{Error, Result};

/// Forced observations shown before the first free choice of every game.
pub const FORCED_OBSERVATIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InfoCondition {
    EqualInfo,
    UnequalInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonTag {
    pub trial_id: String,
    pub condition: InfoCondition,
    /// Game horizon (1 or 6).
    pub horizon: u32,
    pub first_free_choice: bool,
    /// Mean forced reward of machine 1 minus that of machine 2.
    pub reward_difference: f64,
    pub forced_means: [f64; 2],
    /// The less-observed machine in the unequal condition.
    pub more_informative_option: Option<u8>,
}

/// Tags horizon trials with their information condition computed from the forced
/// observations alone.
pub fn tag_horizon_conditions(trials: &[ChoiceTrial]) -> Result<Vec<HorizonTag>> {
    trials.iter().map(tag_one).collect()
}

fn tag_one(trial: &ChoiceTrial) -> Result<HorizonTag> {
    let state = match (trial.paradigm, trial.horizon()) {
        (Paradigm::Horizon, Some(state)) => state,
        _ => {
            return Err(Error::Paradigm {
                trial_id: trial.trial_id.clone(),
                expected: Paradigm::Horizon.to_string(),
                found: trial.payload.paradigm().to_string(),
            })
        }
    };
    if state.observations.len() < FORCED_OBSERVATIONS {
        return Err(Error::Data(format!(
            "trial {}: {} observations, expected at least {FORCED_OBSERVATIONS} forced",
            trial.trial_id,
            state.observations.len()
        )));
    }
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for obs in state.forced() {
        let slot = match obs.machine {
            1 => 0,
            2 => 1,
            m => {
                return Err(Error::Data(format!(
                    "trial {}: observation names machine {m}",
                    trial.trial_id
                )))
            }
        };
        sums[slot] += obs.reward;
        counts[slot] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::Data(format!(
            "trial {}: forced observations cover only one machine",
            trial.trial_id
        )));
    }
    let means = [sums[0] / counts[0] as f64, sums[1] / counts[1] as f64];
    let (condition, more_informative_option) = if counts[0] == counts[1] {
        (InfoCondition::EqualInfo, None)
    } else if counts[0] < counts[1] {
        (InfoCondition::UnequalInfo, Some(1))
    } else {
        (InfoCondition::UnequalInfo, Some(2))
    };
    Ok(HorizonTag {
        trial_id: trial.trial_id.clone(),
        condition,
        horizon: state.game_horizon(),
        first_free_choice: state.trial_index == 0,
        reward_difference: means[0] - means[1],
        forced_means: means,
        more_informative_option,
    })
}
