use std::path::{Path, PathBuf};

use centaur::analysis::SimulationMode;
use centaur::baselines::HybridOptions;
use centaur::embedding::ScalerScope;
use centaur::prompt::PromptOptions;
use centaur::readout::{FitOptions, DEFAULT_ALPHA_GRID, DEFAULT_TEMPERATURE_GRID};
use centaur::task::DEFAULT_FRACTIONS;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Where artifacts go. Not embedded in artifacts, so re-runs into another
    /// directory produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Column mapping for a delimited-text dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_mapping: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub folds: FoldConfig,
    #[serde(default = "alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "temperature_grid")]
    pub temperature_grid: Vec<f64>,
    #[serde(default)]
    pub scaler: ScalerSetting,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub hybrid: HybridOptions,
    #[serde(default)]
    pub prompt: PromptOptions,
    /// Option log-probabilities for the log-prob baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineKind>,
    /// Simulated choices (a `simulation.csv`) that replace the dataset's
    /// recorded choices in `curves` and `indifference`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bms: Option<BmsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportConfig>,
}

fn alpha_grid() -> Vec<f64> {
    DEFAULT_ALPHA_GRID.to_vec()
}

fn temperature_grid() -> Vec<f64> {
    DEFAULT_TEMPERATURE_GRID.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldConfig {
    #[serde(default = "fold_count")]
    pub count: usize,
    #[serde(default = "fractions")]
    pub fractions: [f64; 3],
}

fn fold_count() -> usize {
    100
}

fn fractions() -> [f64; 3] {
    DEFAULT_FRACTIONS
}

impl Default for FoldConfig {
    fn default() -> Self {
        Self {
            count: fold_count(),
            fractions: fractions(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerSetting {
    #[default]
    PerFold,
    Global,
    None,
}

impl ScalerSetting {
    pub fn scope(self) -> Option<ScalerScope> {
        match self {
            ScalerSetting::PerFold => Some(ScalerScope::PerFold),
            ScalerSetting::Global => Some(ScalerScope::Global),
            ScalerSetting::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    Logprob,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    GaussianNoise,
    LinearLatent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub trials: usize,
    pub dim: usize,
    pub generator: SynthKind,
    /// True weights are drawn as N(0, weight_scale² / dim).
    #[serde(default = "unit")]
    pub weight_scale: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default = "one_repeat")]
    pub repeats: u32,
    #[serde(default = "prefix")]
    pub id_prefix: String,
}

fn unit() -> f64 {
    1.0
}

fn one_repeat() -> u32 {
    1
}

fn prefix() -> String {
    "s".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// A fit report artifact whose test predictions are simulated.
    pub predictions: PathBuf,
    pub mode: SimulateMode,
}

/// Simulation modes; sampling seeds come from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateMode {
    Sample,
    MedianThreshold,
}

impl SimulateMode {
    pub fn resolve(self, seed: u64) -> SimulationMode {
        match self {
            SimulateMode::Sample => SimulationMode::Sample { seed },
            SimulateMode::MedianThreshold => SimulationMode::MedianThreshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSource {
    pub dataset: PathBuf,
    pub embeddings: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub train: Vec<TaskSource>,
    pub holdout: TaskSource,
    #[serde(default = "holdout_folds")]
    pub holdout_folds: usize,
}

fn holdout_folds() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmsConfig {
    /// CSV of per-participant NLLs, header `participant_id,<model>,…`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<PathBuf>,
    /// Fit report artifacts whose per-participant test NLLs form the evidence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<PathBuf>,
    #[serde(default = "unit")]
    pub prior_alpha: f64,
    #[serde(default = "samples")]
    pub samples: usize,
}

fn samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Fit report artifacts to tabulate.
    pub inputs: Vec<PathBuf>,
}

/// Loads a run config, or the config embedded in an artifact. Relative paths
/// are resolved against the file's directory.
pub fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("config {}: {e}", path.display())))?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("schema_version") => {
            map.remove("config").ok_or_else(|| {
                Failure::invalid(format!("artifact {} has no embedded config", path.display()))
            })?
        }
        other => other,
    };
    let mut config: RunConfig = serde_json::from_value(value)
        .map_err(|e| Failure::invalid(format!("config {}: {e}", path.display())))?;
    let base = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let base = std::path::absolute(base)
        .map_err(|e| Failure::invalid(format!("config {}: {e}", path.display())))?;
    config.resolve_paths(&base);
    Ok(config)
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

impl RunConfig {
    fn resolve_paths(&mut self, base: &Path) {
        resolve_opt(base, &mut self.output_dir);
        resolve_opt(base, &mut self.dataset);
        resolve_opt(base, &mut self.dataset_mapping);
        resolve_opt(base, &mut self.embeddings);
        resolve_opt(base, &mut self.logprobs);
        resolve_opt(base, &mut self.choices);
        if let Some(s) = &mut self.simulate {
            resolve(base, &mut s.predictions);
        }
        if let Some(t) = &mut self.transfer {
            for task in t.train.iter_mut().chain(std::iter::once(&mut t.holdout)) {
                resolve(base, &mut task.dataset);
                resolve(base, &mut task.embeddings);
            }
        }
        if let Some(b) = &mut self.bms {
            resolve_opt(base, &mut b.evidence);
            b.reports.iter_mut().for_each(|p| resolve(base, p));
        }
        if let Some(r) = &mut self.report {
            r.inputs.iter_mut().for_each(|p| resolve(base, p));
        }
    }

    pub fn seed(&self) -> Result<u64, Failure> {
        self.seed
            .ok_or_else(|| Failure::invalid("seed: a seed is required (config or --seed)"))
    }

    pub fn check_grids(&self) -> Result<(), Failure> {
        if self.alpha_grid.is_empty() {
            return Err(Failure::invalid("alpha_grid: must not be empty"));
        }
        if self.temperature_grid.is_empty() {
            return Err(Failure::invalid("temperature_grid: must not be empty"));
        }
        Ok(())
    }

    /// The config as embedded in artifacts.
    pub fn embedded(&self) -> RunConfig {
        RunConfig {
            output_dir: None,
            ..self.clone()
        }
    }
}

/// A config field that must name an existing file.
pub fn require_file<'a>(field: &str, value: &'a Option<PathBuf>) -> Result<&'a Path, Failure> {
    let path = value
        .as_deref()
        .ok_or_else(|| Failure::invalid(format!("{field}: required for this subcommand")))?;
    existing(field, path)
}

pub fn existing<'a>(field: &str, path: &'a Path) -> Result<&'a Path, Failure> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Failure::invalid(format!("{field}: file not found: {}", path.display())))
    }
}
