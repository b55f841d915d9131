#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use centaur::embedding::{synth_embeddings, write_store, Generator};
use centaur::numeric::sigmoid;
use centaur::synthetic::{
    simulate_experiential_symbolic, simulate_horizon, EsDesign, HorizonDesign,
};
use centaur::task::io::write_trials;
use centaur::task::ChoiceTrial;
use serde_json::{json, Value};
use tempfile::TempDir;

pub fn centaur(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_centaur"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small inputs for every subcommand in a temporary directory.
pub struct Inputs {
    pub dir: TempDir,
}

fn observed_difference(state: &centaur::task::HorizonState) -> f64 {
    let mut sums = [0.0; 2];
    let mut counts = [0.0; 2];
    for o in &state.observations {
        sums[usize::from(o.machine - 1)] += o.reward;
        counts[usize::from(o.machine - 1)] += 1.0;
    }
    sums[0] / counts[0] - sums[1] / counts[1]
}

impl Inputs {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let inputs = Self { dir };

        let mut design = HorizonDesign::new(120, 11);
        design.participants = 3;
        let horizon = simulate_horizon(&design, |s| sigmoid(0.15 * observed_difference(s))).unwrap();
        write_trials(inputs.path("horizon.jsonl"), &horizon).unwrap();
        inputs.store_for(&horizon, "horizon.cntr", 8, 12);

        let es = simulate_experiential_symbolic(&EsDesign::new(6, 13), |t| {
            sigmoid(8.0 * (t.e_win_probability - t.s_win_probability))
        })
        .unwrap();
        write_trials(inputs.path("es.jsonl"), &es).unwrap();
        inputs.store_for(&es, "es.cntr", 8, 14);

        let logprobs: String = horizon
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let l1 = -0.2 - 0.01 * (i % 7) as f64;
                format!("{}\n", json!({"trial_id": t.trial_id, "logp_1": l1, "logp_2": -0.9}))
            })
            .collect();
        fs::write(inputs.path("logprobs.jsonl"), logprobs).unwrap();

        let mut evidence = String::from("participant_id,centaur,hybrid\n");
        for p in 0..12 {
            let gap = if p % 3 == 0 { -2.0 } else { 3.0 };
            evidence.push_str(&format!("p{p},{},{}\n", 40.0, 40.0 + gap));
        }
        fs::write(inputs.path("evidence.csv"), evidence).unwrap();
        inputs
    }

    fn store_for(&self, trials: &[ChoiceTrial], name: &str, dim: usize, seed: u64) {
        let ids: Vec<String> = trials.iter().map(|t| t.trial_id.clone()).collect();
        let (store, _) = synth_embeddings(&ids, dim, seed, &Generator::GaussianNoise).unwrap();
        write_store(&store, self.path(name)).unwrap();
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Writes `config` as `name` and returns its path.
    pub fn config(&self, name: &str, config: Value) -> PathBuf {
        let path = self.path(name);
        fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
        path
    }

    /// Runs `subcommand` with `config`, writing to `out`; panics on failure.
    pub fn run(&self, subcommand: &str, config: &Path, out: &str) -> PathBuf {
        let out_dir = self.path(out);
        let result = centaur(&[
            subcommand,
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            result.status.success(),
            "{subcommand} failed: {}",
            stderr(&result)
        );
        out_dir
    }
}

/// Every file in `dir`, sorted by name, with its bytes.
pub fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

/// The JSON artifact in `dir` that embeds the run's config.
pub fn artifact(dir: &Path) -> PathBuf {
    files(dir)
        .into_iter()
        .map(|(name, _)| dir.join(name))
        .find(|p| p.extension().is_some_and(|e| e == "json"))
        .expect("a json artifact")
}

/// The full set of subcommand runs, as (subcommand, config, output dir name).
/// Later runs read the outputs of earlier ones.
pub fn pipeline(inputs: &Inputs) -> Vec<(String, PathBuf)> {
    let mut runs = Vec::new();
    let small = json!({"count": 5});
    let mut step = |sub: &str, name: &str, config: Value| {
        let path = inputs.config(&format!("{name}.json"), config);
        let out = inputs.run(sub, &path, name);
        runs.push((sub.to_string(), out));
    };
    step("embed-synth", "synth", json!({
        "seed": 3,
        "synth": {"trials": 150, "dim": 6, "generator": "linear_latent", "repeats": 3}
    }));
    step("prompts", "prompts", json!({"seed": 1, "dataset": "horizon.jsonl"}));
    step("fit", "fit", json!({
        "seed": 5, "dataset": "synth/trials.jsonl", "embeddings": "synth/embeddings.cntr",
        "folds": small, "alpha_grid": [0.0, 0.01, 0.1]
    }));
    step("fit-re", "fit_re", json!({
        "seed": 5, "dataset": "horizon.jsonl", "embeddings": "horizon.cntr",
        "folds": small, "alpha_grid": [0.01, 0.1]
    }));
    step("baseline", "random", json!({
        "seed": 5, "dataset": "horizon.jsonl", "folds": small, "baseline": "random"
    }));
    step("baseline", "logprob", json!({
        "seed": 5, "dataset": "horizon.jsonl", "folds": small, "baseline": "logprob",
        "logprobs": "logprobs.jsonl"
    }));
    step("baseline", "hybrid", json!({
        "seed": 5, "dataset": "horizon.jsonl", "folds": small, "baseline": "hybrid"
    }));
    step("simulate", "simulate", json!({
        "seed": 9, "dataset": "horizon.jsonl",
        "simulate": {"predictions": "hybrid/fit_report.json", "mode": "sample"}
    }));
    step("curves", "curves", json!({"seed": 1, "dataset": "horizon.jsonl"}));
    step("curves", "curves_sim", json!({
        "seed": 1, "dataset": "horizon.jsonl", "choices": "simulate/simulation.csv"
    }));
    step("indifference", "indifference", json!({"seed": 1, "dataset": "es.jsonl"}));
    step("bms", "bms_csv", json!({
        "seed": 2, "bms": {"evidence": "evidence.csv", "samples": 100000}
    }));
    step("bms", "bms_reports", json!({
        "seed": 2, "bms": {"reports": ["fit_re/fit_report.json", "hybrid/fit_report.json"], "samples": 100000}
    }));
    step("transfer", "transfer", json!({
        "seed": 4, "alpha_grid": [0.01, 0.1], "temperature_grid": [0.5, 1.0],
        "transfer": {
            "train": [{"dataset": "horizon.jsonl", "embeddings": "horizon.cntr"}],
            "holdout": {"dataset": "es.jsonl", "embeddings": "es.cntr"},
            "holdout_folds": 4
        }
    }));
    step("report", "report", json!({
        "seed": 1,
        "report": {"inputs": ["random/fit_report.json", "hybrid/fit_report.json", "logprob/fit_report.json"]}
    }));
    runs
}
