//! Trial files: canonical JSON lines, plus an adapter for delimited text.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ChoiceTrial, ExperientialSymbolicTrial, GambleOption, HorizonState, Observation, Outcome,
    Paradigm, Payload,
};
use crate::error::{Error, Result};

pub fn read_trials(path: impl AsRef<Path>) -> Result<Vec<ChoiceTrial>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    parse_trials(BufReader::new(file))
}

pub fn parse_trials(reader: impl BufRead) -> Result<Vec<ChoiceTrial>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let trial = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("line {}: {e}", lineno + 1)))?;
        out.push(trial);
    }
    Ok(out)
}

pub fn write_trials(path: impl AsRef<Path>, trials: &[ChoiceTrial]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = BufWriter::new(file);
    for trial in trials {
        serde_json::to_writer(&mut w, trial)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Maps columns of an external delimited file onto canonical trial fields.
///
/// Canonical field names: `trial_id`, `participant_id`, `paradigm`,
/// `human_choice`, `repeat_count`, `choice_count_1`; description gambles use
/// `option1_values`, `option1_probabilities`, `option2_values`,
/// `option2_probabilities`; horizon states use `observation_machines`,
/// `observation_rewards`, `horizon`, `trial_index`, `generating_mean_1`,
/// `generating_mean_2`; experiential–symbolic trials use `e_history`,
/// `s_values`, `s_probabilities`, `e_win_probability`, `s_win_probability`.
/// List-valued cells separate their items with `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    /// Column name → canonical field.
    pub columns: BTreeMap<String, String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Paradigm used when no column maps to `paradigm`.
    #[serde(default)]
    pub paradigm: Option<Paradigm>,
}

fn default_delimiter() -> char {
    ','
}

const CANONICAL_FIELDS: &[&str] = &[
    "trial_id",
    "participant_id",
    "paradigm",
    "human_choice",
    "repeat_count",
    "choice_count_1",
    "option1_values",
    "option1_probabilities",
    "option2_values",
    "option2_probabilities",
    "observation_machines",
    "observation_rewards",
    "horizon",
    "trial_index",
    "generating_mean_1",
    "generating_mean_2",
    "e_history",
    "s_values",
    "s_probabilities",
    "e_win_probability",
    "s_win_probability",
];

impl ColumnMapping {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mapping: ColumnMapping = serde_json::from_str(&text)?;
        mapping.check()?;
        Ok(mapping)
    }

    fn check(&self) -> Result<()> {
        for field in self.columns.values() {
            if !CANONICAL_FIELDS.contains(&field.as_str()) {
                return Err(Error::Config(format!("unknown canonical field `{field}`")));
            }
        }
        if !self.columns.values().any(|f| f == "trial_id") {
            return Err(Error::Config("column mapping has no trial_id column".into()));
        }
        if self.paradigm.is_none() && !self.columns.values().any(|f| f == "paradigm") {
            return Err(Error::Config(
                "column mapping needs a paradigm column or a fixed paradigm".into(),
            ));
        }
        Ok(())
    }
}

pub fn read_delimited(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<Vec<ChoiceTrial>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    parse_delimited(file, mapping)
}

pub fn parse_delimited(reader: impl std::io::Read, mapping: &ColumnMapping) -> Result<Vec<ChoiceTrial>> {
    mapping.check()?;
    if !mapping.delimiter.is_ascii() {
        return Err(Error::Config("delimiter must be an ASCII character".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut field_index = BTreeMap::new();
    for (column, field) in &mapping.columns {
        let idx = headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::Config(format!("column `{column}` not found in header")))?;
        field_index.insert(field.as_str(), idx);
    }

    let mut out = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let row = Row {
            record: &record,
            fields: &field_index,
            row_no: row_no + 2,
        };
        out.push(row.to_trial(mapping.paradigm)?);
    }
    Ok(out)
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    fields: &'a BTreeMap<&'a str, usize>,
    row_no: usize,
}

impl Row<'_> {
    fn get(&self, field: &str) -> Option<&str> {
        self.fields
            .get(field)
            .and_then(|&i| self.record.get(i))
            .filter(|s| !s.is_empty())
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Data(format!("row {}: {msg}", self.row_no))
    }

    fn require(&self, field: &str) -> Result<&str> {
        self.get(field).ok_or_else(|| self.err(format!("missing {field}")))
    }

    fn number<T: std::str::FromStr>(&self, field: &str) -> Result<Option<T>> {
        self.get(field)
            .map(|s| s.parse::<T>().map_err(|_| self.err(format!("bad {field} `{s}`"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, field: &str) -> Result<Vec<T>> {
        self.require(field)?
            .split(';')
            .map(|s| {
                let s = s.trim();
                s.parse::<T>().map_err(|_| self.err(format!("bad {field} item `{s}`")))
            })
            .collect()
    }

    fn gamble(&self, values: &str, probabilities: &str) -> Result<GambleOption> {
        let v: Vec<f64> = self.list(values)?;
        let p: Vec<f64> = self.list(probabilities)?;
        if v.len() != p.len() {
            return Err(self.err(format!("{values} and {probabilities} differ in length")));
        }
        Ok(GambleOption::new(
            v.into_iter().zip(p).map(|(v, p)| Outcome::new(v, p)).collect(),
        ))
    }

    fn to_trial(&self, fixed: Option<Paradigm>) -> Result<ChoiceTrial> {
        let paradigm = match self.get("paradigm") {
            Some(s) => serde_json::from_value(serde_json::Value::String(s.to_string()))
                .map_err(|_| self.err(format!("unknown paradigm `{s}`")))?,
            None => fixed.ok_or_else(|| self.err("missing paradigm"))?,
        };
        let payload = match paradigm {
            Paradigm::Description => Payload::Description {
                option1: self.gamble("option1_values", "option1_probabilities")?,
                option2: self.gamble("option2_values", "option2_probabilities")?,
            },
            Paradigm::Horizon => {
                let machines: Vec<u8> = self.list("observation_machines")?;
                let rewards: Vec<f64> = self.list("observation_rewards")?;
                if machines.len() != rewards.len() {
                    return Err(self.err("observation machines and rewards differ in length"));
                }
                let generating_means = match (
                    self.number::<f64>("generating_mean_1")?,
                    self.number::<f64>("generating_mean_2")?,
                ) {
                    (Some(a), Some(b)) => Some([a, b]),
                    _ => None,
                };
                Payload::Horizon(HorizonState {
                    observations: machines
                        .into_iter()
                        .zip(rewards)
                        .map(|(m, r)| Observation::new(m, r))
                        .collect(),
                    horizon: self
                        .number("horizon")?
                        .ok_or_else(|| self.err("missing horizon"))?,
                    trial_index: self.number("trial_index")?.unwrap_or(0),
                    generating_means,
                })
            }
            Paradigm::ExperientialSymbolic => {
                let e_win: f64 = self
                    .number("e_win_probability")?
                    .ok_or_else(|| self.err("missing e_win_probability"))?;
                let s_win: f64 = self
                    .number("s_win_probability")?
                    .ok_or_else(|| self.err("missing s_win_probability"))?;
                let mut trial = ExperientialSymbolicTrial::new(self.list("e_history")?, e_win, s_win);
                if self.get("s_values").is_some() {
                    trial.s_option = self.gamble("s_values", "s_probabilities")?;
                }
                Payload::ExperientialSymbolic(trial)
            }
        };
        let human_choice: u8 = self
            .number("human_choice")?
            .ok_or_else(|| self.err("missing human_choice"))?;
        let repeat_count: u32 = self.number("repeat_count")?.unwrap_or(1);
        let choice_count_1 = match self.number("choice_count_1")? {
            Some(c) => c,
            None if repeat_count == 1 => u32::from(human_choice == 1),
            None => return Err(self.err("aggregate row without choice_count_1")),
        };
        Ok(ChoiceTrial {
            trial_id: self.require("trial_id")?.to_string(),
            participant_id: self.get("participant_id").map(str::to_string),
            paradigm,
            payload,
            human_choice,
            repeat_count,
            choice_count_1,
        })
    }
}
