use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use centaur::analysis::{
    compute_regret, fit_choice_curve, indifference_points, informative_choice_rate,
    simulate_from_predictions, ChoiceCurveFit, IndifferencePoint,
};
use centaur::baselines::{
    fit_hybrid, fit_logprob_baseline, random_baseline_report, read_logprobs,
};
use centaur::bms::{best_model_table, run_bms, BmsOptions, EvidenceMatrix};
use centaur::embedding::{read_store, sample_weights, synth_embeddings, write_store, EmbeddingStore, Generator};
use centaur::prompt::render_all;
use centaur::readout::{
    fit_random_effects, holdout_fold_plan, nested_cv_fit, transfer_fit, CvOptions, FitReport,
    TransferOptions,
};
use centaur::synthetic::{description_trials, trial_ids};
use centaur::task::io::{read_delimited, read_trials, write_trials, ColumnMapping};
use centaur::task::{
    make_fold_plan, tag_horizon_conditions, validate_dataset, ChoiceTrial, FoldPlan,
    InfoCondition,
};
use serde::{Deserialize, Serialize};

use crate::artifact::{read_report, Output};
use crate::config::{self, existing, require_file, BmsConfig, RunConfig, SynthKind};
use crate::{Command, Common, Failure};

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Prompts(c) => prompts(&prepare(&c)?),
        Command::EmbedSynth(c) => embed_synth(&prepare(&c)?),
        Command::Fit(c) => fit(&prepare(&c)?, false),
        Command::FitRe(c) => fit(&prepare(&c)?, true),
        Command::Baseline { common, kind } => {
            let mut cfg = prepare(&common)?;
            if kind.is_some() {
                cfg.baseline = kind;
            }
            baseline(&cfg)
        }
        Command::Simulate(c) => simulate(&prepare(&c)?),
        Command::Curves(c) => curves(&prepare(&c)?),
        Command::Indifference(c) => indifference(&prepare(&c)?),
        Command::Bms { common, evidence } => {
            let mut cfg = prepare(&common)?;
            if let Some(path) = evidence {
                let path = std::path::absolute(&path)
                    .map_err(|e| Failure::invalid(format!("--evidence: {e}")))?;
                cfg.bms
                    .get_or_insert_with(|| BmsConfig {
                        evidence: None,
                        reports: Vec::new(),
                        prior_alpha: 1.0,
                        samples: 1_000_000,
                    })
                    .evidence = Some(path);
            }
            bms(&cfg)
        }
        Command::Transfer(c) => transfer(&prepare(&c)?),
        Command::Report(c) => report(&prepare(&c)?),
    }
}

fn prepare(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &common.out {
        let out = std::path::absolute(out).map_err(|e| Failure::invalid(format!("--out: {e}")))?;
        cfg.output_dir = Some(out);
    }
    cfg.seed()?;
    cfg.check_grids()?;
    Ok(cfg)
}

fn load_dataset(field: &str, path: &Path, mapping: Option<&Path>) -> Result<Vec<ChoiceTrial>, Failure> {
    existing(field, path)?;
    let trials = match mapping {
        Some(m) => read_delimited(path, &ColumnMapping::load(existing("dataset_mapping", m)?)?)?,
        None => read_trials(path)?,
    };
    let report = validate_dataset(&trials);
    if let Some(v) = report.violations.first() {
        return Err(Failure::invalid(format!(
            "{field}: {} has {} invalid record(s), first: trial {}: {}",
            path.display(),
            report.violations.len(),
            v.trial_id,
            v.message
        )));
    }
    Ok(trials)
}

fn trials(cfg: &RunConfig) -> Result<Vec<ChoiceTrial>, Failure> {
    let path = require_file("dataset", &cfg.dataset)?;
    load_dataset("dataset", path, cfg.dataset_mapping.as_deref())
}

fn store(field: &str, path: &Path) -> Result<EmbeddingStore, Failure> {
    Ok(read_store(existing(field, path)?)?)
}

fn fold_plan(cfg: &RunConfig, trials: &[ChoiceTrial], seed: u64) -> Result<FoldPlan, Failure> {
    let ids: Vec<String> = trials.iter().map(|t| t.trial_id.clone()).collect();
    make_fold_plan(&ids, cfg.folds.count, cfg.folds.fractions, seed)
        .map_err(|e| Failure::invalid(format!("folds: {e}")))
}

fn prompts(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let trials = trials(cfg)?;
    let records = render_all(&trials, cfg.prompt)?;
    let out = Output::new("prompts", cfg, seed)?;
    out.jsonl("prompts.jsonl", &records)?;
    #[derive(Serialize)]
    struct Summary {
        prompts: usize,
        file: &'static str,
    }
    out.json(
        "prompts.json",
        &Summary {
            prompts: records.len(),
            file: "prompts.jsonl",
        },
    )
}

#[derive(Serialize)]
struct SynthSummary {
    trials: usize,
    dim: usize,
    true_weights: Option<Vec<f64>>,
    /// Expected NLL of the generating probabilities, `Σ repeats·H(p)`.
    bernoulli_entropy: f64,
    random_nll: f64,
}

/// Weights are drawn from `seed`, embeddings from `seed + 1` and choices from
/// `seed + 2`.
fn embed_synth(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let synth = cfg
        .synth
        .as_ref()
        .ok_or_else(|| Failure::invalid("synth: required for embed-synth"))?;
    if synth.trials == 0 || synth.dim == 0 {
        return Err(Failure::invalid("synth: trials and dim must be positive"));
    }
    let ids = trial_ids(&synth.id_prefix, synth.trials);
    let (generator, weights) = match synth.generator {
        SynthKind::GaussianNoise => (Generator::GaussianNoise, None),
        SynthKind::LinearLatent => {
            let w = sample_weights(synth.dim, synth.weight_scale, seed)?;
            (
                Generator::LinearLatent {
                    true_weights: w.clone(),
                    noise_sd: synth.noise_sd,
                },
                Some(w),
            )
        }
    };
    let (store, probabilities) = synth_embeddings(&ids, synth.dim, seed.wrapping_add(1), &generator)?;
    let probabilities = probabilities.unwrap_or_else(|| vec![0.5; ids.len()]);
    let trials = description_trials(&ids, &probabilities, synth.repeats, seed.wrapping_add(2))?;
    let entropy = probabilities
        .iter()
        .map(|&p| {
            let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
            f64::from(synth.repeats) * (h(p) + h(1.0 - p))
        })
        .sum();

    let out = Output::new("embed-synth", cfg, seed)?;
    write_store(&store, out.path("embeddings.cntr"))?;
    write_trials(out.path("trials.jsonl"), &trials)?;
    out.json(
        "synth.json",
        &SynthSummary {
            trials: trials.len(),
            dim: synth.dim,
            true_weights: weights,
            bernoulli_entropy: entropy,
            random_nll: centaur::baselines::random_baseline_nll(&trials),
        },
    )
}

fn cv_options(cfg: &RunConfig) -> CvOptions {
    CvOptions {
        alpha_grid: cfg.alpha_grid.clone(),
        scaler: cfg.scaler.scope(),
        fit: cfg.fit,
        warm_start: true,
        record_coefficients: false,
    }
}

fn fit(cfg: &RunConfig, random_effects: bool) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let trials = trials(cfg)?;
    let store = store("embeddings", require_file("embeddings", &cfg.embeddings)?)?;
    let plan = fold_plan(cfg, &trials, seed)?;
    let options = cv_options(cfg);
    let report = if random_effects {
        fit_random_effects(&store, &trials, &plan, &options)?
    } else {
        nested_cv_fit(&store, &trials, &plan, &options)?
    };
    let command = if random_effects { "fit-re" } else { "fit" };
    Output::new(command, cfg, seed)?.json("fit_report.json", &report)
}

fn baseline(cfg: &RunConfig) -> Result<(), Failure> {
    use crate::config::BaselineKind;
    let seed = cfg.seed()?;
    let kind = cfg
        .baseline
        .ok_or_else(|| Failure::invalid("baseline: kind required (config or --kind)"))?;
    let trials = trials(cfg)?;
    let plan = fold_plan(cfg, &trials, seed)?;
    let report = match kind {
        BaselineKind::Random => random_baseline_report(&trials, &plan)?,
        BaselineKind::Logprob => {
            let records = read_logprobs(require_file("logprobs", &cfg.logprobs)?)?;
            fit_logprob_baseline(&records, &trials, &plan, &cfg.temperature_grid)?
        }
        BaselineKind::Hybrid => fit_hybrid(&trials, &plan, &cfg.hybrid)?,
    };
    Output::new("baseline", cfg, seed)?.json("fit_report.json", &report)
}

#[derive(Serialize, Deserialize)]
struct SimulationRow {
    trial_id: String,
    fold: usize,
    p_choice_1: f64,
    choice: u8,
}

#[derive(Serialize)]
struct RegretRow<'a> {
    trial_id: &'a str,
    choice: u8,
    regret: f64,
    approximate: bool,
}

#[derive(Serialize)]
struct RegretStats {
    mean: f64,
    standard_error: f64,
    approximate_count: usize,
}

#[derive(Serialize)]
struct SimulationSummary {
    trials: usize,
    option_1_rate: f64,
    model_regret: RegretStats,
    recorded_regret: RegretStats,
}

fn simulate(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Failure::invalid("simulate: required for simulate"))?;
    let report = read_report(existing("simulate.predictions", &sim.predictions)?)?;
    let all = trials(cfg)?;
    let by_id: HashMap<&str, &ChoiceTrial> = all.iter().map(|t| (t.trial_id.as_str(), t)).collect();
    let simulated = simulate_from_predictions(&report.predictions, sim.mode.resolve(seed))?;
    let mut chosen = Vec::with_capacity(simulated.len());
    for s in &simulated {
        let t = by_id.get(s.trial_id.as_str()).ok_or_else(|| {
            Failure::invalid(format!("simulate.predictions: trial {} not in dataset", s.trial_id))
        })?;
        chosen.push((*t).clone());
    }
    let choices: Vec<u8> = simulated.iter().map(|s| s.choice).collect();
    let recorded: Vec<u8> = chosen.iter().map(|t| t.human_choice).collect();
    let regret = compute_regret(&chosen, &choices, &cfg.hybrid.priors)?;
    let human = compute_regret(&chosen, &recorded, &cfg.hybrid.priors)?;

    let out = Output::new("simulate", cfg, seed)?;
    let rows: Vec<SimulationRow> = report
        .predictions
        .iter()
        .zip(&simulated)
        .map(|(p, s)| SimulationRow {
            trial_id: s.trial_id.clone(),
            fold: s.fold,
            p_choice_1: p.p_choice_1,
            choice: s.choice,
        })
        .collect();
    out.csv("simulation.csv", &rows)?;
    let regret_rows: Vec<RegretRow> = regret
        .trials
        .iter()
        .zip(&choices)
        .map(|(r, &c)| RegretRow {
            trial_id: &r.trial_id,
            choice: c,
            regret: r.regret,
            approximate: r.approximate,
        })
        .collect();
    out.csv("regret.csv", &regret_rows)?;
    let stats = |r: &centaur::analysis::RegretSummary| RegretStats {
        mean: r.mean,
        standard_error: r.standard_error,
        approximate_count: r.approximate_count,
    };
    out.json(
        "simulation.json",
        &SimulationSummary {
            trials: choices.len(),
            option_1_rate: choices.iter().filter(|&&c| c == 1).count() as f64 / choices.len() as f64,
            model_regret: stats(&regret),
            recorded_regret: stats(&human),
        },
    )
}

/// Trials to analyse with their choices: the recorded ones, or those of a
/// simulation restricted to the simulated trials.
fn analysed_choices(cfg: &RunConfig) -> Result<(Vec<ChoiceTrial>, Vec<u8>), Failure> {
    let all = trials(cfg)?;
    let Some(path) = &cfg.choices else {
        let choices = all.iter().map(|t| t.human_choice).collect();
        return Ok((all, choices));
    };
    let path = existing("choices", path)?;
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::invalid(format!("choices: {}: {e}", path.display())))?;
    let mut simulated = HashMap::new();
    for row in reader.deserialize::<SimulationRow>() {
        let row = row.map_err(|e| Failure::invalid(format!("choices: {}: {e}", path.display())))?;
        simulated.insert(row.trial_id, row.choice);
    }
    let mut kept = Vec::new();
    let mut choices = Vec::new();
    for t in all {
        if let Some(&c) = simulated.get(&t.trial_id) {
            kept.push(t);
            choices.push(c);
        }
    }
    if kept.is_empty() {
        return Err(Failure::invalid(format!(
            "choices: {} shares no trials with the dataset",
            path.display()
        )));
    }
    Ok((kept, choices))
}

#[derive(Serialize)]
struct CurveRow {
    condition: String,
    n_trials: usize,
    intercept: f64,
    beta_reward_difference: f64,
    beta_horizon: f64,
    beta_interaction: f64,
    se_intercept: Option<f64>,
    se_reward_difference: Option<f64>,
    se_horizon: Option<f64>,
    se_interaction: Option<f64>,
    converged: bool,
    separated: bool,
    degenerate: bool,
}

impl From<&ChoiceCurveFit> for CurveRow {
    fn from(f: &ChoiceCurveFit) -> Self {
        let se = f.standard_errors;
        Self {
            condition: format!("{:?}", f.condition),
            n_trials: f.n_trials,
            intercept: f.intercept,
            beta_reward_difference: f.beta_reward_difference,
            beta_horizon: f.beta_horizon,
            beta_interaction: f.beta_interaction,
            se_intercept: se.map(|s| s[0]),
            se_reward_difference: se.map(|s| s[1]),
            se_horizon: se.map(|s| s[2]),
            se_interaction: se.map(|s| s[3]),
            converged: f.converged,
            separated: f.separated,
            degenerate: f.degenerate,
        }
    }
}

#[derive(Serialize)]
struct CurvesSummary {
    fits: Vec<ChoiceCurveFit>,
    /// Conditions without first free choices.
    missing_conditions: Vec<InfoCondition>,
    informative_rates: centaur::analysis::InformativeRates,
}

fn curves(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let (trials, choices) = analysed_choices(cfg)?;
    let tags = tag_horizon_conditions(&trials)?;
    let mut fits = Vec::new();
    let mut missing_conditions = Vec::new();
    for condition in [InfoCondition::EqualInfo, InfoCondition::UnequalInfo] {
        if tags.iter().any(|t| t.first_free_choice && t.condition == condition) {
            fits.push(fit_choice_curve(&trials, &choices, condition)?);
        } else {
            missing_conditions.push(condition);
        }
    }
    let rates = informative_choice_rate(&trials, &choices)?;
    let out = Output::new("curves", cfg, seed)?;
    out.csv("curves.csv", &fits.iter().map(CurveRow::from).collect::<Vec<_>>())?;
    out.json(
        "curves.json",
        &CurvesSummary {
            fits,
            missing_conditions,
            informative_rates: rates,
        },
    )
}

fn indifference(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let (trials, choices) = analysed_choices(cfg)?;
    let points: Vec<IndifferencePoint> = indifference_points(&trials, &choices)?;
    let out = Output::new("indifference", cfg, seed)?;
    out.csv("indifference.csv", &points)?;
    out.json("indifference.json", &points)
}

#[derive(Serialize)]
struct BmsSummary {
    participants: usize,
    result: centaur::bms::BmsResult,
    best_models: Vec<centaur::bms::BestModelRow>,
}

fn bms(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let settings = cfg
        .bms
        .as_ref()
        .ok_or_else(|| Failure::invalid("bms: evidence CSV or reports required (config or --evidence)"))?;
    let evidence = match (&settings.evidence, settings.reports.is_empty()) {
        (Some(path), _) => EvidenceMatrix::read_nll_csv(existing("bms.evidence", path)?)?,
        (None, false) => {
            let reports = settings
                .reports
                .iter()
                .map(|p| read_report(existing("bms.reports", p)?))
                .collect::<Result<Vec<_>, _>>()?;
            EvidenceMatrix::from_reports(&reports)?
        }
        (None, true) => return Err(Failure::invalid("bms: evidence CSV or reports required")),
    };
    let options = BmsOptions {
        prior_alpha: settings.prior_alpha,
        samples: settings.samples,
        ..BmsOptions::new(seed)
    };
    let result = run_bms(&evidence, &options)?;
    Output::new("bms", cfg, seed)?.json(
        "bms.json",
        &BmsSummary {
            participants: evidence.participants.len(),
            best_models: best_model_table(&evidence),
            result,
        },
    )
}

fn transfer(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let settings = cfg
        .transfer
        .as_ref()
        .ok_or_else(|| Failure::invalid("transfer: required for transfer"))?;
    if settings.train.is_empty() {
        return Err(Failure::invalid("transfer.train: at least one training task required"));
    }
    let mut train = Vec::new();
    for (i, task) in settings.train.iter().enumerate() {
        let field = format!("transfer.train[{i}]");
        let trials = load_dataset(&format!("{field}.dataset"), &task.dataset, None)?;
        let store = store(&format!("{field}.embeddings"), &task.embeddings)?;
        train.push((store, trials));
    }
    let holdout_trials = load_dataset("transfer.holdout.dataset", &settings.holdout.dataset, None)?;
    let holdout_store = store("transfer.holdout.embeddings", &settings.holdout.embeddings)?;
    let plan = holdout_fold_plan(&holdout_trials, settings.holdout_folds, seed)?;
    let options = TransferOptions {
        alpha_grid: cfg.alpha_grid.clone(),
        temperature_grid: cfg.temperature_grid.clone(),
        scaler: cfg.scaler.scope(),
        fit: cfg.fit,
        warm_start: true,
    };
    let tasks: Vec<(&EmbeddingStore, &[ChoiceTrial])> =
        train.iter().map(|(s, t)| (s, t.as_slice())).collect();
    let report = transfer_fit(&tasks, (&holdout_store, &holdout_trials), &plan, &options)?;
    Output::new("transfer", cfg, seed)?.json("fit_report.json", &report)
}

#[derive(Debug, Serialize)]
struct ReportRow {
    model: String,
    source: String,
    aggregate_test_nll: f64,
    total_test_choices: f64,
    nll_per_choice: f64,
    folds: usize,
    converged: bool,
}

fn report(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let settings = cfg
        .report
        .as_ref()
        .ok_or_else(|| Failure::invalid("report: inputs required"))?;
    if settings.inputs.is_empty() {
        return Err(Failure::invalid("report.inputs: must not be empty"));
    }
    let mut rows = Vec::new();
    for path in &settings.inputs {
        let r: FitReport = read_report(existing("report.inputs", path)?)?;
        rows.push(ReportRow {
            source: path.display().to_string(),
            nll_per_choice: r.aggregate_test_nll / r.total_test_choices,
            aggregate_test_nll: r.aggregate_test_nll,
            total_test_choices: r.total_test_choices,
            folds: r.folds.len(),
            converged: r.all_converged(),
            model: r.model,
        });
    }
    rows.sort_by(|a, b| {
        a.aggregate_test_nll
            .total_cmp(&b.aggregate_test_nll)
            .then_with(|| a.model.cmp(&b.model))
    });
    let out = Output::new("report", cfg, seed)?;
    out.csv("report.csv", &rows)?;
    let by_model: BTreeMap<&str, f64> = rows
        .iter()
        .map(|r| (r.model.as_str(), r.aggregate_test_nll))
        .collect();
    #[derive(Serialize)]
    struct Table<'a> {
        rows: &'a [ReportRow],
        by_model: BTreeMap<&'a str, f64>,
    }
    out.json(
        "report.json",
        &Table {
            rows: &rows,
            by_model,
        },
    )
}
