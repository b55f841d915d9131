//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p centaur-cli --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use centaur::analysis::{fit_choice_curve, indifference_points, informative_choice_rate};
use centaur::baselines::{
    fit_hybrid_coefficients, hybrid_regressors, kalman_update, random_baseline_nll,
    HybridOptions, HybridPriors, KalmanBelief,
};
use centaur::bms::{run_bms, BmsOptions, EvidenceMatrix};
use centaur::embedding::{sample_weights, synth_embeddings, EmbeddingStore, Generator};
use centaur::numeric::sigmoid;
use centaur::prompt::{render_choices13k, render_experiential_symbolic, render_horizon};
use centaur::readout::{
    fit_logistic, fit_random_effects, nested_cv_fit, nll_and_grad, CvOptions, Dataset,
    FitOptions, FitReport, ReadoutModel,
};
use centaur::synthetic::{
    description_trials, simulate_experiential_symbolic, simulate_horizon, trial_ids, EsDesign,
    HorizonDesign,
};
use centaur::task::{
    make_fold_plan, ChoiceTrial, ExperientialSymbolicTrial, GambleOption, HorizonState,
    InfoCondition, Observation, Payload, DEFAULT_FRACTIONS,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn main() {
    let criteria = [
        Criterion { name: "exactness", budget: Duration::from_secs(1), run: exactness },
        Criterion { name: "gradient", budget: Duration::from_secs(30), run: gradient },
        Criterion { name: "optimizer-oracle", budget: Duration::from_secs(30), run: optimizer_oracle },
        Criterion { name: "pipeline-recovery", budget: Duration::from_secs(120), run: pipeline_recovery },
        Criterion { name: "random-effects-gain", budget: Duration::from_secs(60), run: random_effects_gain },
        Criterion { name: "kalman-oracle", budget: Duration::from_secs(5), run: kalman_oracle },
        Criterion { name: "hybrid-recovery", budget: Duration::from_secs(60), run: hybrid_recovery },
        Criterion { name: "choice-curves", budget: Duration::from_secs(60), run: choice_curves },
        Criterion { name: "indifference-shape", budget: Duration::from_secs(60), run: indifference_shape },
        Criterion { name: "bms", budget: Duration::from_secs(30), run: bms },
        Criterion { name: "prompt-fidelity", budget: Duration::from_secs(1), run: prompt_fidelity },
        Criterion { name: "determinism", budget: Duration::from_secs(120), run: determinism },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = (c.run)();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= c.budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:<20} {} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            v.detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for d in 0..50 {
        let n = rng.random_range(0..300);
        let mut total: u64 = 0;
        let trials: Vec<ChoiceTrial> = (0..n)
            .map(|i| {
                let repeats = rng.random_range(1..=40u32);
                total += u64::from(repeats);
                let ones = rng.random_range(0..=repeats);
                ChoiceTrial {
                    trial_id: format!("d{d}-{i}"),
                    participant_id: None,
                    paradigm: centaur::task::Paradigm::Description,
                    payload: Payload::Description {
                        option1: GambleOption::from_pairs(&[(1.0, 1.0)]),
                        option2: GambleOption::from_pairs(&[(2.0, 1.0)]),
                    },
                    human_choice: if 2 * ones >= repeats { 1 } else { 2 },
                    repeat_count: repeats,
                    choice_count_1: ones,
                }
            })
            .collect();
        worst = worst.max((random_baseline_nll(&trials) - total as f64 * LN_2).abs());
    }
    verdict(worst <= 1e-9, format!("max |error| {worst:.2e} over 50 datasets (tolerance 1e-9)"))
}

fn ln1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Penalized objective written out independently of the library.
fn oracle_objective(model: &ReadoutModel, data: &Dataset) -> f64 {
    let tau = model.inverse_temperature.unwrap_or(1.0);
    let mut total = 0.0;
    let mut weight = 0.0;
    for i in 0..data.len() {
        let mut w = model.weights.clone();
        if let (Some(effects), Some(p)) = (&model.random_effects, &data.participants[i]) {
            if let Some(b) = effects.get(p) {
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk += bk;
                }
            }
        }
        let eta: f64 = model.intercept + data.x.row(i).iter().zip(&w).map(|(x, w)| x * w).sum::<f64>();
        total += data.ones[i] * ln1pexp(-tau * eta) + data.twos[i] * ln1pexp(tau * eta);
        weight += data.ones[i] + data.twos[i];
    }
    let mut sq: f64 = model.weights.iter().map(|w| w * w).sum();
    if let Some(effects) = &model.random_effects {
        sq += effects.values().flatten().map(|b| b * b).sum::<f64>();
    }
    total + 0.5 * model.alpha * weight * sq
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, dim: usize, participants: usize) -> Dataset {
    let x = Array2::from_shape_fn((n, dim), |_| rng.random_range(-2.0..2.0));
    let mut ones = Vec::new();
    let mut twos = Vec::new();
    for _ in 0..n {
        let r = rng.random_range(1..=5u32);
        let o = rng.random_range(0..=r);
        ones.push(f64::from(o));
        twos.push(f64::from(r - o));
    }
    Dataset {
        ids: (0..n).map(|i| format!("r{i}")).collect(),
        x,
        ones,
        twos,
        participants: (0..n)
            .map(|i| (participants > 0).then(|| format!("p{}", i % participants)))
            .collect(),
    }
}

fn flatten(model: &ReadoutModel) -> Vec<f64> {
    let mut v = model.weights.clone();
    v.push(model.intercept);
    if let Some(effects) = &model.random_effects {
        for b in effects.values() {
            v.extend(b);
        }
    }
    v
}

fn rebuild(template: &ReadoutModel, v: &[f64]) -> ReadoutModel {
    let dim = template.dim();
    let mut m = template.clone();
    m.weights = v[..dim].to_vec();
    m.intercept = v[dim];
    if let Some(effects) = &mut m.random_effects {
        for (g, b) in effects.values_mut().enumerate() {
            let start = dim + 1 + g * dim;
            b.copy_from_slice(&v[start..start + dim]);
        }
    }
    m
}

fn gradient() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let dim = rng.random_range(1..=6);
        let n = rng.random_range(3..=40);
        let random_effects = case % 2 == 1;
        let groups = if random_effects { rng.random_range(1..=3) } else { 0 };
        let data = random_dataset(&mut rng, n, dim, groups);
        let mut model = ReadoutModel::zeros(dim, [0.0, 0.01, 0.3, 2.0][rng.random_range(0..4)]);
        model.weights = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        model.intercept = rng.random_range(-1.0..1.0);
        model.inverse_temperature = Some(rng.random_range(0.05..1.0));
        if random_effects {
            model.random_effects = Some(
                (0..groups)
                    .map(|g| (format!("p{g}"), (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
                    .collect::<BTreeMap<_, _>>(),
            );
        }
        let (value, g) = nll_and_grad(&model, &data).unwrap();
        let mut analytic = g.weights.clone();
        analytic.push(g.intercept);
        for b in g.random_effects.values() {
            analytic.extend(b);
        }
        let theta = flatten(&model);
        let h = 1e-5;
        let numeric: Vec<f64> = (0..theta.len())
            .map(|k| {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[k] += h;
                down[k] -= h;
                (oracle_objective(&rebuild(&model, &up), &data)
                    - oracle_objective(&rebuild(&model, &down), &data))
                    / (2.0 * h)
            })
            .collect();
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(
            numeric.iter().map(|a| a * a).sum::<f64>().sqrt(),
        );
        worst = worst.max(diff / scale.max(1e-12));
        let value_error = (value - oracle_objective(&model, &data)).abs() / value.abs().max(1.0);
        worst = worst.max(value_error);
    }
    verdict(worst < 1e-5, format!("max relative error {worst:.2e} over 100 configurations (tolerance 1e-5)"))
}

/// Grid search followed by coordinate pattern search down to step 1e-10.
fn brute_force(f: impl Fn(&[f64]) -> f64, k: usize) -> (Vec<f64>, f64) {
    let grid: Vec<f64> = (0..=32).map(|i| -8.0 + 0.5 * f64::from(i)).collect();
    let mut best = vec![0.0; k];
    let mut best_value = f64::INFINITY;
    let total = grid.len().pow(k as u32);
    for idx in 0..total {
        let mut rest = idx;
        let point: Vec<f64> = (0..k)
            .map(|_| {
                let v = grid[rest % grid.len()];
                rest /= grid.len();
                v
            })
            .collect();
        let v = f(&point);
        if v < best_value {
            best_value = v;
            best = point;
        }
    }
    let mut step = 0.25;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..k {
            for sign in [1.0, -1.0] {
                let mut p = best.clone();
                p[i] += sign * step;
                let v = f(&p);
                if v < best_value {
                    best_value = v;
                    best = p;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_value)
}

fn optimizer_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let dim = 1 + case % 2;
        let n = if case == 0 { 4 } else { rng.random_range(4..=12) };
        let data = random_dataset(&mut rng, n, dim, 0);
        let alpha = [0.1, 0.01, 0.5, 0.05][case % 4];
        let options = FitOptions::default();
        let fit = fit_logistic(&data, alpha, false, None, &options).unwrap();
        let objective = |p: &[f64]| {
            let mut m = ReadoutModel::zeros(dim, alpha);
            m.weights = p[..dim].to_vec();
            m.intercept = p[dim];
            oracle_objective(&m, &data)
        };
        let (_, brute) = brute_force(objective, dim + 1);
        let ours = oracle_objective(&fit.model, &data);
        worst = worst.max((ours - brute).abs()).max((fit.objective - brute).abs());
    }
    verdict(worst <= 1e-6, format!("max |NLL − brute force| {worst:.2e} over 20 instances (tolerance 1e-6)"))
}

fn latent_dataset(n: usize, dim: usize, seed: u64, noise: bool) -> (EmbeddingStore, Vec<ChoiceTrial>, Vec<f64>) {
    let ids = trial_ids("r", n);
    let generator = if noise {
        Generator::GaussianNoise
    } else {
        Generator::LinearLatent {
            true_weights: sample_weights(dim, 1.0, seed).unwrap(),
            noise_sd: 0.0,
        }
    };
    let (store, p) = synth_embeddings(&ids, dim, seed + 1, &generator).unwrap();
    let p = p.unwrap_or_else(|| vec![0.5; n]);
    let trials = description_trials(&ids, &p, 1, seed + 2).unwrap();
    (store, trials, p)
}

fn cv(store: &EmbeddingStore, trials: &[ChoiceTrial], seed: u64, random_effects: bool) -> FitReport {
    let ids: Vec<String> = trials.iter().map(|t| t.trial_id.clone()).collect();
    let plan = make_fold_plan(&ids, 100, DEFAULT_FRACTIONS, seed).unwrap();
    let options = CvOptions::default();
    if random_effects {
        fit_random_effects(store, trials, &plan, &options).unwrap()
    } else {
        nested_cv_fit(store, trials, &plan, &options).unwrap()
    }
}

fn pipeline_recovery() -> Verdict {
    let n = 2000;
    let (store, trials, p) = latent_dataset(n, 64, 41, false);
    let entropy: f64 = p
        .iter()
        .map(|&p| {
            let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
            h(p) + h(1.0 - p)
        })
        .sum();
    let report = cv(&store, &trials, 42, false);
    let latent_gap = (report.aggregate_test_nll - entropy).abs() / entropy;

    let (store, trials, _) = latent_dataset(n, 64, 43, true);
    let noise = cv(&store, &trials, 44, false);
    let floor = n as f64 * LN_2;
    let noise_gap = (noise.aggregate_test_nll - floor).abs() / floor;
    let positive_alpha = noise.folds.iter().filter(|f| f.chosen_alpha > 0.0).count();

    verdict(
        latent_gap <= 0.05 && noise_gap <= 0.02 && positive_alpha == noise.folds.len(),
        format!(
            "latent NLL {:.1} vs entropy {entropy:.1} ({:.2}% ≤ 5%); noise NLL {:.1} vs N ln 2 {floor:.1} ({:.2}% ≤ 2%); α > 0 in {positive_alpha}/{} folds",
            report.aggregate_test_nll,
            100.0 * latent_gap,
            noise.aggregate_test_nll,
            100.0 * noise_gap,
            noise.folds.len()
        ),
    )
}

/// Two participants whose true weights are `w` and `sign·w`.
fn two_participants(sign: f64, seed: u64) -> (EmbeddingStore, Vec<ChoiceTrial>) {
    let n = 2000;
    let dim = 8;
    let ids = trial_ids("t", n);
    let (store, _) = synth_embeddings(&ids, dim, seed, &Generator::GaussianNoise).unwrap();
    let w = sample_weights(dim, 2.0, seed + 1).unwrap();
    let p: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { sign };
            let eta: f64 = store.row_at(i).iter().zip(&w).map(|(&x, w)| f64::from(x) * w).sum();
            sigmoid(s * eta)
        })
        .collect();
    let mut trials = description_trials(&ids, &p, 1, seed + 2).unwrap();
    for (i, t) in trials.iter_mut().enumerate() {
        t.participant_id = Some(format!("p{}", i % 2));
    }
    (store, trials)
}

fn random_effects_gain() -> Verdict {
    let (store, trials) = two_participants(-1.0, 51);
    let fe = cv(&store, &trials, 52, false).aggregate_test_nll;
    let re = cv(&store, &trials, 52, true).aggregate_test_nll;
    let (store, trials) = two_participants(1.0, 53);
    let fe_same = cv(&store, &trials, 54, false).aggregate_test_nll;
    let re_same = cv(&store, &trials, 54, true).aggregate_test_nll;
    let bound = 0.01 * trials.len() as f64 * LN_2;
    let gap = (re_same - fe_same).abs();
    verdict(
        re < fe && gap < bound,
        format!(
            "opposite weights: RE {re:.1} < FE {fe:.1}; shared weights: |RE − FE| = {gap:.2} < {bound:.2}"
        ),
    )
}

fn kalman_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let priors = HybridPriors {
            prior_mean: rng.random_range(0.0..100.0),
            prior_variance: rng.random_range(1.0..400.0),
            noise_variance: rng.random_range(1.0..200.0),
        };
        let len = rng.random_range(1..=20);
        let mut belief = KalmanBelief::new(&priors);
        let mut sums = [0.0; 2];
        let mut counts = [0.0; 2];
        for _ in 0..len {
            let m: u8 = rng.random_range(1..=2);
            let r = f64::from(rng.random_range(1..=99));
            belief = kalman_update(&belief, m, r);
            sums[usize::from(m - 1)] += r;
            counts[usize::from(m - 1)] += 1.0;
        }
        for k in 0..2 {
            let precision = 1.0 / priors.prior_variance + counts[k] / priors.noise_variance;
            let mean = (priors.prior_mean / priors.prior_variance + sums[k] / priors.noise_variance) / precision;
            worst = worst
                .max((belief.means[k] - mean).abs())
                .max((belief.variances[k] - 1.0 / precision).abs());
        }
    }
    verdict(worst <= 1e-12, format!("max |sequential − batch| {worst:.2e} over 1000 sequences (tolerance 1e-12)"))
}

fn hybrid_recovery() -> Verdict {
    let beta = [0.5, 0.3, 0.2];
    let priors = HybridPriors::default();
    let mut trials = simulate_horizon(&HorizonDesign::new(6000, 71), |s| {
        let r = hybrid_regressors(s, &priors);
        sigmoid(beta[0] * r.v + beta[1] * r.ru + beta[2] * r.vtu)
    })
    .unwrap();
    trials.truncate(20_000);
    let fit = fit_hybrid_coefficients(&trials, &HybridOptions::default(), 0.0).unwrap();
    let w = &fit.model.weights;
    let worst = w.iter().zip(beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    verdict(
        trials.len() == 20_000 && fit.converged() && worst <= 0.05,
        format!(
            "recovered ({:.3}, {:.3}, {:.3}) from {} trials, max |error| {worst:.3} (tolerance 0.05)",
            w[0],
            w[1],
            w[2],
            trials.len()
        ),
    )
}

fn forced_difference(state: &HorizonState) -> f64 {
    let mut sums = [0.0; 2];
    let mut counts = [0.0; 2];
    for o in state.forced() {
        sums[usize::from(o.machine - 1)] += o.reward;
        counts[usize::from(o.machine - 1)] += 1.0;
    }
    sums[0] / counts[0] - sums[1] / counts[1]
}

fn first_choices(seed: u64, agent: impl Fn(&HorizonState) -> f64) -> (Vec<ChoiceTrial>, Vec<u8>) {
    let mut design = HorizonDesign::new(20_000, seed);
    design.first_choice_only = true;
    let trials = simulate_horizon(&design, agent).unwrap();
    let choices = trials.iter().map(|t| t.human_choice).collect();
    (trials, choices)
}

fn choice_curves() -> Verdict {
    let (trials, choices) = first_choices(81, |s| {
        let temperature = if s.game_horizon() == 6 { 2.0 } else { 1.0 };
        sigmoid(0.2 * forced_difference(s) / temperature)
    });
    let curve = fit_choice_curve(&trials, &choices, InfoCondition::EqualInfo).unwrap();

    let (trials, choices) = first_choices(82, |s| {
        let ones = s.forced().iter().filter(|o| o.machine == 1).count();
        let informative = match ones {
            1 => 1.0,
            3 => -1.0,
            _ => 0.0,
        };
        let bonus = if s.game_horizon() == 6 { 1.0 } else { 0.0 };
        sigmoid(0.2 * forced_difference(s) + bonus * informative)
    });
    let rates = informative_choice_rate(&trials, &choices).unwrap();
    let r1 = rates.horizon_1.rate.unwrap_or(f64::NAN);
    let r6 = rates.horizon_6.rate.unwrap_or(f64::NAN);
    let se = curve.standard_errors.map_or(f64::NAN, |s| s[3]);
    verdict(
        curve.beta_interaction < 0.0 && curve.beta_reward_difference > 0.0 && r6 > r1,
        format!(
            "temperature agent: Δ×horizon {:.4} (SE {se:.4}) < 0 on {} trials; bonus agent: informative rate {r6:.3} at horizon 6 > {r1:.3} at horizon 1",
            curve.beta_interaction, curve.n_trials
        ),
    )
}

fn es_points(seed: u64, agent: impl Fn(&ExperientialSymbolicTrial) -> f64) -> Vec<(f64, Option<f64>)> {
    let trials = simulate_experiential_symbolic(&EsDesign::new(1000, seed), agent).unwrap();
    let choices: Vec<u8> = trials.iter().map(|t| t.human_choice).collect();
    indifference_points(&trials, &choices)
        .unwrap()
        .into_iter()
        .map(|p| (p.e_win_probability, p.s_star))
        .collect()
}

fn indifference_shape() -> Verdict {
    let biased = es_points(91, |t| sigmoid(10.0 * (0.5 - t.s_win_probability)));
    let stars: Vec<f64> = biased.iter().filter_map(|p| p.1).collect();
    let mean = stars.iter().sum::<f64>() / stars.len() as f64;
    let sd = (stars.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (stars.len() as f64 - 1.0)).sqrt();

    let unbiased = es_points(92, |t| sigmoid(10.0 * (t.e_win_probability - t.s_win_probability)));
    let worst = unbiased
        .iter()
        .map(|(e, s)| s.map_or(f64::INFINITY, |s| (s - e).abs()))
        .fold(0.0, f64::max);
    verdict(
        stars.len() == biased.len() && sd < 0.02 && worst <= 0.03,
        format!(
            "S-only agent: s* SD {sd:.4} < 0.02 across {} E probabilities (mean {mean:.3}); unbiased agent: max |s* − e| {worst:.4} ≤ 0.03",
            stars.len()
        ),
    )
}

fn evidence(rows: Vec<Vec<f64>>) -> EvidenceMatrix {
    let k = rows[0].len();
    EvidenceMatrix::new(
        (0..k).map(|m| format!("m{m}")).collect(),
        (0..rows.len()).map(|p| format!("s{p}")).collect(),
        rows,
    )
    .unwrap()
}

fn bms() -> Verdict {
    let options = BmsOptions::new(7);
    let mixed = evidence((0..50).map(|s| if s < 35 { vec![3.0, 0.0] } else { vec![0.0, 3.0] }).collect());
    let r1 = run_bms(&mixed, &options).unwrap().expected_frequencies[0];

    let symmetric = evidence((0..50).map(|s| if s < 25 { vec![3.0, 0.0] } else { vec![0.0, 3.0] }).collect());
    let ep = run_bms(&symmetric, &options).unwrap().exceedance_probabilities.unwrap();

    let equal = evidence(vec![vec![-20.0; 3]; 50]);
    let protected = run_bms(&equal, &options).unwrap().protected_exceedance.unwrap();
    let protected_gap = protected.iter().map(|p| (p - 1.0 / 3.0).abs()).fold(0.0, f64::max);

    verdict(
        (0.6..=0.8).contains(&r1) && (ep[0] - 0.5).abs() <= 0.02 && protected_gap <= 0.01,
        format!(
            "70/30 population r₁ = {r1:.3} ∈ [0.6, 0.8]; symmetric EP₁ = {:.4} (±0.02 of 0.5); equal evidence protected EP max |·−1/3| = {protected_gap:.4} ≤ 0.01",
            ep[0]
        ),
    )
}

const CHOICES13K: &str = "Machine 1 delivers 90 dollars with 10.0% chance and -12 dollars with 90.0% chance.
Machine 2 delivers -13 dollars with 40.0% chance and 22 dollars with 60.0% chance.

Your goal is to maximize the amount of received dollars.

Q: Which machine do you choose?
A: Machine";

const HORIZON: &str = "You made the following observations in the past:
 - Machine 1 delivered 34 dollars.
 - Machine 1 delivered 41 dollars.
 - Machine 2 delivered 57 dollars.
 - Machine 1 delivered 37 dollars.

Your goal is to maximize the sum of received dollars within six additional choices.

Q: Which machine do you choose?
A: Machine";

const EXPERIENTIAL_SYMBOLIC: &str = "You made the following observations in the past:
 - Machine 1 delivered 1 dollars.
 - Machine 1 delivered 1 dollars.
 - Machine 1 delivered -1 dollars.
 - Machine 1 delivered 1 dollars.
 - Machine 1 delivered 1 dollars.
 - Machine 1 delivered -1 dollars.
 - Machine 1 delivered 1 dollars.

Machine 2 delivers -1 dollars with 30.0% chance and 1 dollars with 70.0% chance.

Your goal is to maximize the amount of received dollars.

Q: Which machine do you choose?
A: Machine";

fn prompt_fidelity() -> Verdict {
    let description = render_choices13k(
        &GambleOption::from_pairs(&[(90.0, 0.1), (-12.0, 0.9)]),
        &GambleOption::from_pairs(&[(-13.0, 0.4), (22.0, 0.6)]),
    )
    .unwrap();
    let horizon = render_horizon(&HorizonState {
        observations: [(1, 34.0), (1, 41.0), (2, 57.0), (1, 37.0)]
            .iter()
            .map(|&(m, r)| Observation::new(m, r))
            .collect(),
        horizon: 6,
        trial_index: 0,
        generating_means: None,
    })
    .unwrap();
    let es = render_experiential_symbolic(&ExperientialSymbolicTrial::new(
        vec![1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0],
        0.6,
        0.7,
    ))
    .unwrap();
    let matches = [
        description.text == CHOICES13K,
        horizon.text == HORIZON,
        es.text == EXPERIENTIAL_SYMBOLIC,
    ];
    let count = matches.iter().filter(|&&m| m).count();
    verdict(count == 3, format!("{count}/3 templates byte-exact"))
}

fn determinism() -> Verdict {
    let inputs = common::Inputs::new();
    let runs = common::pipeline(&inputs);
    let mut mismatched = Vec::new();
    for (i, (sub, out)) in runs.iter().enumerate() {
        let config = common::artifact(out);
        let rerun = inputs.run(sub, &config, &format!("rerun{i}"));
        if common::files(out) != common::files(&rerun) {
            mismatched.push(format!("{sub} ({})", out.file_name().unwrap().to_string_lossy()));
        }
    }
    verdict(
        mismatched.is_empty(),
        format!(
            "{}/{} runs bit-identical when re-run from their artifact{}",
            runs.len() - mismatched.len(),
            runs.len(),
            if mismatched.is_empty() { String::new() } else { format!("; differing: {}", mismatched.join(", ")) }
        ),
    )
}
