//! Text prompts for each paradigm, ending at the completion point `A: Machine`.
//!
//! Blocks are separated by one blank line; every decision is rendered on its
//! own, without feedback from other trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{ChoiceTrial, ExperientialSymbolicTrial, GambleOption, HorizonState, Payload};

pub const QUESTION_LINE: &str = "Q: Which machine do you choose?";
pub const COMPLETION_POINT: &str = "A: Machine";

const AMOUNT_GOAL: &str = "Your goal is to maximize the amount of received dollars.";
const HISTORY_HEADER: &str = "You made the following observations in the past:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    /// Byte offset where the option token (" 1" or " 2") would be inserted.
    pub option_token_position: usize,
}

impl PromptText {
    fn finish(mut body: String) -> Self {
        body.push_str("\n\n");
        body.push_str(QUESTION_LINE);
        body.push('\n');
        body.push_str(COMPLETION_POINT);
        let option_token_position = body.len();
        Self {
            text: body,
            option_token_position,
        }
    }
}

/// How horizon counts above ten are written in the goal line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptOptions {
    /// Spell counts up to ten as English words (the only layout seen in the
    /// reference fixtures); larger counts always fall back to numerals.
    #[serde(default)]
    pub numeral_horizons: bool,
}

/// Renders a currency amount: integral values without decimals, others with the
/// shortest exact representation.
pub fn format_amount(value: f64) -> Result<String> {
    if !value.is_finite() {
        return Err(Error::Render(format!("non-finite amount {value}")));
    }
    if value.fract() == 0.0 && value.abs() < 1e15 {
        Ok(format!("{}", value as i64))
    } else {
        Ok(format!("{value}"))
    }
}

/// Renders a probability as a percentage with one decimal, e.g. `10.0%`.
pub fn format_percent(probability: f64) -> Result<String> {
    if !probability.is_finite() {
        return Err(Error::Render(format!("non-finite probability {probability}")));
    }
    Ok(format!("{:.1}%", probability * 100.0))
}

fn gamble_line(machine: u8, gamble: &GambleOption) -> Result<String> {
    if gamble.outcomes.is_empty() {
        return Err(Error::Render(format!("machine {machine} has no outcomes")));
    }
    let parts = gamble
        .outcomes
        .iter()
        .map(|o| {
            Ok(format!(
                "{} dollars with {} chance",
                format_amount(o.value)?,
                format_percent(o.probability)?
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(format!("Machine {machine} delivers {}.", parts.join(" and ")))
}

fn history_block(lines: impl IntoIterator<Item = (u8, f64)>) -> Result<String> {
    let mut out = String::from(HISTORY_HEADER);
    for (machine, reward) in lines {
        out.push_str(&format!(
            "\n - Machine {machine} delivered {} dollars.",
            format_amount(reward)?
        ));
    }
    Ok(out)
}

fn count_words(n: u32, numeral: bool) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    match WORDS.get(n as usize) {
        Some(w) if !numeral => w.to_string(),
        _ => n.to_string(),
    }
}

pub fn render_choices13k(option1: &GambleOption, option2: &GambleOption) -> Result<PromptText> {
    let body = format!(
        "{}\n{}\n\n{AMOUNT_GOAL}",
        gamble_line(1, option1)?,
        gamble_line(2, option2)?
    );
    Ok(PromptText::finish(body))
}

pub fn render_horizon(state: &HorizonState) -> Result<PromptText> {
    render_horizon_with(state, PromptOptions::default())
}

pub fn render_horizon_with(state: &HorizonState, options: PromptOptions) -> Result<PromptText> {
    if state.observations.is_empty() {
        return Err(Error::Render("horizon state has no observations".into()));
    }
    if state.horizon < 1 {
        return Err(Error::Render("horizon must be at least 1".into()));
    }
    let history = history_block(state.observations.iter().map(|o| (o.machine, o.reward)))?;
    let noun = if state.horizon == 1 { "choice" } else { "choices" };
    let body = format!(
        "{history}\n\nYour goal is to maximize the sum of received dollars within {} additional {noun}.",
        count_words(state.horizon, options.numeral_horizons)
    );
    Ok(PromptText::finish(body))
}

pub fn render_experiential_symbolic(trial: &ExperientialSymbolicTrial) -> Result<PromptText> {
    if trial.e_option_history.is_empty() {
        return Err(Error::Render("experienced history is empty".into()));
    }
    let history = history_block(trial.e_option_history.iter().map(|&r| (1, r)))?;
    let body = format!(
        "{history}\n\n{}\n\n{AMOUNT_GOAL}",
        gamble_line(2, &trial.s_option)?
    );
    Ok(PromptText::finish(body))
}

pub fn render_trial(trial: &ChoiceTrial, options: PromptOptions) -> Result<PromptText> {
    match &trial.payload {
        Payload::Description { option1, option2 } => render_choices13k(option1, option2),
        Payload::Horizon(state) => render_horizon_with(state, options),
        Payload::ExperientialSymbolic(es) => render_experiential_symbolic(es),
    }
    .map_err(|e| match e {
        Error::Render(msg) => Error::Render(format!("trial {}: {msg}", trial.trial_id)),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub trial_id: String,
    pub prompt: String,
}

pub fn render_all(trials: &[ChoiceTrial], options: PromptOptions) -> Result<Vec<PromptRecord>> {
    trials
        .iter()
        .map(|t| {
            Ok(PromptRecord {
                trial_id: t.trial_id.clone(),
                prompt: render_trial(t, options)?.text,
            })
        })
        .collect()
}
