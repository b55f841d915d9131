//! Seeded generators of synthetic trials for the three paradigms, driven by
//! caller-supplied choice agents.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{
    ChoiceTrial, ExperientialSymbolicTrial, GambleOption, HorizonState, Observation, Payload,
    FORCED_OBSERVATIONS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonDesign {
    pub games: usize,
    pub seed: u64,
    /// Keep only each game's first free choice.
    #[serde(default)]
    pub first_choice_only: bool,
    #[serde(default = "reward_sd")]
    pub reward_sd: f64,
    /// Games are assigned round-robin to this many participants.
    #[serde(default = "one")]
    pub participants: usize,
}

fn reward_sd() -> f64 {
    8.0
}

fn one() -> usize {
    1
}

impl HorizonDesign {
    pub fn new(games: usize, seed: u64) -> Self {
        Self {
            games,
            seed,
            first_choice_only: false,
            reward_sd: reward_sd(),
            participants: 1,
        }
    }
}

const BASE_MEANS: [f64; 2] = [40.0, 60.0];
const MEAN_GAPS: [f64; 5] = [4.0, 8.0, 12.0, 20.0, 30.0];

fn draw_reward(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let noise = Normal::new(mean, sd).expect("finite sd");
    noise.sample(rng).round().clamp(1.0, 99.0)
}

/// Plays horizon-task games: four forced observations with counts (2,2) in
/// half the games and (1,3) or (3,1) in the rest, then 1 or 6 free choices.
/// `agent` returns p(choose machine 1) for a state; choices are sampled from it
/// and their outcomes appended to the following states.
pub fn simulate_horizon<F>(design: &HorizonDesign, agent: F) -> Result<Vec<ChoiceTrial>>
where
    F: Fn(&HorizonState) -> f64,
{
    if design.participants == 0 {
        return Err(Error::Config("participants must be positive".into()));
    }
    if !(design.reward_sd.is_finite() && design.reward_sd >= 0.0) {
        return Err(Error::Config(format!("invalid reward_sd {}", design.reward_sd)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut out = Vec::new();
    for game in 0..design.games {
        let base = BASE_MEANS[rng.random_range(0..2)];
        let gap = MEAN_GAPS[rng.random_range(0..MEAN_GAPS.len())];
        let other = if rng.random_bool(0.5) { base + gap } else { base - gap };
        let means = if rng.random_bool(0.5) { [base, other] } else { [other, base] };
        let horizon: u32 = if rng.random_bool(0.5) { 1 } else { 6 };
        let ones = if rng.random_bool(0.5) {
            2
        } else if rng.random_bool(0.5) {
            1
        } else {
            3
        };
        let mut forced: Vec<u8> = (0..FORCED_OBSERVATIONS)
            .map(|i| if i < ones { 1 } else { 2 })
            .collect();
        forced.shuffle(&mut rng);
        let mut observations: Vec<Observation> = forced
            .iter()
            .map(|&m| Observation::new(m, draw_reward(&mut rng, means[usize::from(m - 1)], design.reward_sd)))
            .collect();
        let participant = format!("p{}", game % design.participants);
        let free = if design.first_choice_only { 1 } else { horizon };
        for t in 0..free {
            let state = HorizonState {
                observations: observations.clone(),
                horizon: horizon - t,
                trial_index: t,
                generating_means: Some(means),
            };
            let p = agent(&state);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Data(format!("agent returned probability {p}")));
            }
            let choice: u8 = if rng.random_bool(p) { 1 } else { 2 };
            let reward = draw_reward(&mut rng, means[usize::from(choice - 1)], design.reward_sd);
            observations.push(Observation::new(choice, reward));
            out.push(ChoiceTrial::single(
                format!("h{game:06}-{t}"),
                Some(participant.clone()),
                Payload::Horizon(state),
                choice,
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsDesign {
    #[serde(default = "e_grid")]
    pub e_win_probabilities: Vec<f64>,
    #[serde(default = "s_grid")]
    pub s_win_probabilities: Vec<f64>,
    /// Trials per (E, S) cell.
    pub repeats: usize,
    #[serde(default = "history_len")]
    pub history_len: usize,
    pub seed: u64,
}

fn e_grid() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9]
}

fn s_grid() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}

fn history_len() -> usize {
    10
}

impl EsDesign {
    pub fn new(repeats: usize, seed: u64) -> Self {
        Self {
            e_win_probabilities: e_grid(),
            s_win_probabilities: s_grid(),
            repeats,
            history_len: history_len(),
            seed,
        }
    }
}

/// Experiential–symbolic trials over the (E, S) win-probability grid with ±1
/// histories drawn from the E-option. `agent` returns p(choose E = machine 1).
pub fn simulate_experiential_symbolic<F>(design: &EsDesign, agent: F) -> Result<Vec<ChoiceTrial>>
where
    F: Fn(&ExperientialSymbolicTrial) -> f64,
{
    if design.history_len == 0 {
        return Err(Error::Config("history_len must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut out = Vec::new();
    for (i, &e) in design.e_win_probabilities.iter().enumerate() {
        for (j, &s) in design.s_win_probabilities.iter().enumerate() {
            for r in 0..design.repeats {
                let history = (0..design.history_len)
                    .map(|_| if rng.random_bool(e) { 1.0 } else { -1.0 })
                    .collect();
                let trial = ExperientialSymbolicTrial::new(history, e, s);
                let p = agent(&trial);
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Data(format!("agent returned probability {p}")));
                }
                let choice: u8 = if rng.random_bool(p) { 1 } else { 2 };
                out.push(ChoiceTrial::single(
                    format!("es-{i}-{j}-{r}"),
                    None,
                    Payload::ExperientialSymbolic(trial),
                    choice,
                ));
            }
        }
    }
    Ok(out)
}

/// A random gamble with one or two outcomes, integer values in [−100, 100] and
/// probabilities on a 0.1% grid.
pub fn random_gamble(rng: &mut impl Rng) -> GambleOption {
    fn v(rng: &mut impl Rng) -> f64 {
        f64::from(rng.random_range(-100i32..=100))
    }
    if rng.random_bool(0.2) {
        GambleOption::from_pairs(&[(v(rng), 1.0)])
    } else {
        let p = f64::from(rng.random_range(1u32..1000)) / 1000.0;
        GambleOption::from_pairs(&[(v(rng), p), (v(rng), 1.0 - p)])
    }
}

/// Description trials `ids[i]` with choices sampled from `probabilities[i]`
/// (p of option 1), `repeats` choices each. Gambles are random.
pub fn description_trials(
    ids: &[String],
    probabilities: &[f64],
    repeats: u32,
    seed: u64,
) -> Result<Vec<ChoiceTrial>> {
    if ids.len() != probabilities.len() {
        return Err(Error::Shape {
            expected: format!("{} probabilities", ids.len()),
            actual: format!("{}", probabilities.len()),
        });
    }
    if repeats == 0 {
        return Err(Error::Config("repeats must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.iter()
        .zip(probabilities)
        .map(|(id, &p)| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Data(format!("trial {id}: probability {p}")));
            }
            let option1 = random_gamble(&mut rng);
            let option2 = random_gamble(&mut rng);
            let ones = (0..repeats).filter(|_| rng.random_bool(p)).count() as u32;
            Ok(ChoiceTrial {
                trial_id: id.clone(),
                participant_id: None,
                paradigm: crate::task::Paradigm::Description,
                payload: Payload::Description { option1, option2 },
                human_choice: if 2 * ones >= repeats { 1 } else { 2 },
                repeat_count: repeats,
                choice_count_1: ones,
            })
        })
        .collect()
}

/// `n` ids of the form `{prefix}{i:06}`.
pub fn trial_ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:06}")).collect()
}
