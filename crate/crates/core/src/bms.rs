//! Random-effects Bayesian model selection over per-participant log evidences.
//!
//! Model frequencies get a Dirichlet posterior fitted by variational Bayes;
//! exceedance probabilities are estimated by sampling that posterior, and the
//! Bayes omnibus risk compares the fit against the equal-frequency null.

use std::collections::BTreeSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::logsumexp;
use crate::readout::FitReport;

/// Participants × models log evidences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceMatrix {
    pub models: Vec<String>,
    pub participants: Vec<String>,
    pub log_evidence: Vec<Vec<f64>>,
}

impl EvidenceMatrix {
    pub fn new(models: Vec<String>, participants: Vec<String>, log_evidence: Vec<Vec<f64>>) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::Config("model selection needs at least two models".into()));
        }
        if participants.is_empty() || participants.len() != log_evidence.len() {
            return Err(Error::Shape {
                expected: format!("{} participant rows (at least one)", participants.len()),
                actual: format!("{} rows", log_evidence.len()),
            });
        }
        for (p, row) in participants.iter().zip(&log_evidence) {
            if row.len() != models.len() {
                return Err(Error::Shape {
                    expected: format!("{} models", models.len()),
                    actual: format!("{} values for participant {p}", row.len()),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("non-finite evidence for participant {p}")));
            }
        }
        Ok(Self {
            models,
            participants,
            log_evidence,
        })
    }

    /// Evidence `−NLL` from held-out negative log-likelihoods.
    pub fn from_nll(models: Vec<String>, participants: Vec<String>, nll: Vec<Vec<f64>>) -> Result<Self> {
        let evidence = nll
            .into_iter()
            .map(|row| row.into_iter().map(|v| -v).collect())
            .collect();
        Self::new(models, participants, evidence)
    }

    /// Per-participant test NLLs of several fit reports, restricted to the
    /// participants scored by every report.
    pub fn from_reports(reports: &[FitReport]) -> Result<Self> {
        let Some(first) = reports.first() else {
            return Err(Error::Config("no reports given".into()));
        };
        let shared: BTreeSet<&String> = first
            .participant_test_nll
            .keys()
            .filter(|p| reports.iter().all(|r| r.participant_test_nll.contains_key(*p)))
            .collect();
        if shared.is_empty() {
            return Err(Error::Data("the reports share no scored participants".into()));
        }
        let participants: Vec<String> = shared.into_iter().cloned().collect();
        let nll = participants
            .iter()
            .map(|p| reports.iter().map(|r| r.participant_test_nll[p]).collect())
            .collect();
        Self::from_nll(reports.iter().map(|r| r.model.clone()).collect(), participants, nll)
    }

    /// Reads a CSV whose header is `participant_id,<model>,…` and whose cells
    /// are per-participant NLLs.
    pub fn read_nll_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let models: Vec<String> = reader.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut participants = Vec::new();
        let mut nll = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let mut cells = record.iter();
            participants.push(cells.next().unwrap_or_default().to_string());
            let row = cells
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| {
                        Error::Format(format!("{}: row {}: bad number {c:?}", path.display(), line + 2))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            nll.push(row);
        }
        Self::from_nll(models, participants, nll)
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmsOptions {
    #[serde(default = "one")]
    pub prior_alpha: f64,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
    #[serde(default = "max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "samples")]
    pub samples: usize,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn tolerance() -> f64 {
    1e-6
}

fn max_iterations() -> usize {
    1000
}

fn samples() -> usize {
    1_000_000
}

impl BmsOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            prior_alpha: one(),
            tolerance: tolerance(),
            max_iterations: max_iterations(),
            samples: samples(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmsResult {
    pub models: Vec<String>,
    pub prior_alpha: f64,
    pub dirichlet_alpha: Vec<f64>,
    pub expected_frequencies: Vec<f64>,
    /// Posterior model assignment of each participant.
    pub responsibilities: Vec<Vec<f64>>,
    pub free_energy: f64,
    pub null_free_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceedance_probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protected_exceedance: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes_omnibus_risk: Option<f64>,
}

fn responsibilities(evidence: &EvidenceMatrix, alpha: &[f64]) -> Vec<Vec<f64>> {
    let total = digamma(alpha.iter().sum());
    let bias: Vec<f64> = alpha.iter().map(|&a| digamma(a) - total).collect();
    evidence
        .log_evidence
        .iter()
        .map(|row| {
            let u: Vec<f64> = row.iter().zip(&bias).map(|(l, b)| l + b).collect();
            let norm = logsumexp(&u);
            u.iter().map(|v| (v - norm).exp()).collect()
        })
        .collect()
}

fn ln_beta(alpha: &[f64]) -> f64 {
    alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(alpha.iter().sum())
}

/// Variational free energy of the random-effects model at (`alpha`, `g`).
fn free_energy(evidence: &EvidenceMatrix, prior: &[f64], alpha: &[f64], g: &[Vec<f64>]) -> f64 {
    let total = digamma(alpha.iter().sum());
    let e_log_r: Vec<f64> = alpha.iter().map(|&a| digamma(a) - total).collect();
    let mut f = 0.0;
    for (row, resp) in evidence.log_evidence.iter().zip(g) {
        for ((l, &gk), elr) in row.iter().zip(resp).zip(&e_log_r) {
            if gk > 0.0 {
                f += gk * (l + elr - gk.ln());
            }
        }
    }
    // E[ln p(r)] − E[ln q(r)]
    f += -ln_beta(prior) + ln_beta(alpha);
    for ((&a0, &a), elr) in prior.iter().zip(alpha).zip(&e_log_r) {
        f += (a0 - a) * elr;
    }
    f
}

/// Free energy of the null hypothesis that all models are equally frequent.
fn null_free_energy(evidence: &EvidenceMatrix) -> f64 {
    let k = evidence.model_count() as f64;
    evidence
        .log_evidence
        .iter()
        .map(|row| logsumexp(row) - k.ln())
        .sum()
}

/// Fixed-point iteration for the Dirichlet posterior over model frequencies.
/// Hitting `max_iterations` is reported through `converged`, not as an error.
pub fn vb_dirichlet(
    evidence: &EvidenceMatrix,
    prior_alpha: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<BmsResult> {
    if !(prior_alpha.is_finite() && prior_alpha > 0.0) {
        return Err(Error::Config(format!("prior_alpha must be positive, got {prior_alpha}")));
    }
    let k = evidence.model_count();
    let prior = vec![prior_alpha; k];
    let mut alpha = prior.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let g = responsibilities(evidence, &alpha);
        let mut next = prior.clone();
        for resp in &g {
            for (a, gk) in next.iter_mut().zip(resp) {
                *a += gk;
            }
        }
        let change = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        alpha = next;
        if change < tolerance {
            converged = true;
            break;
        }
    }
    let g = responsibilities(evidence, &alpha);
    let sum: f64 = alpha.iter().sum();
    Ok(BmsResult {
        models: evidence.models.clone(),
        prior_alpha,
        expected_frequencies: alpha.iter().map(|a| a / sum).collect(),
        free_energy: free_energy(evidence, &prior, &alpha, &g),
        null_free_energy: null_free_energy(evidence),
        responsibilities: g,
        dirichlet_alpha: alpha,
        iterations,
        converged,
        exceedance_probabilities: None,
        protected_exceedance: None,
        bayes_omnibus_risk: None,
    })
}

const CHUNK: usize = 1 << 16;

/// Monte-Carlo probability that each model has the largest frequency under
/// `Dirichlet(alpha)`. Chunk `c` draws from stream `c` of a generator seeded
/// with `seed`, and chunk counts are summed in order, so the estimate depends
/// only on (`alpha`, `samples`, `seed`).
pub fn exceedance_probability(alpha: &[f64], samples: usize, seed: u64) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    let gammas = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::Config(format!("Dirichlet parameter {a}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let chunks = samples.div_ceil(CHUNK);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut counts = vec![0u64; alpha.len()];
            for _ in 0..n {
                let mut best = 0;
                let mut best_value = f64::NEG_INFINITY;
                for (k, g) in gammas.iter().enumerate() {
                    let v = g.sample(&mut rng);
                    if v > best_value {
                        best = k;
                        best_value = v;
                    }
                }
                counts[best] += 1;
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; alpha.len()];
    for chunk in counts {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t += c;
        }
    }
    Ok(total.into_iter().map(|c| c as f64 / samples as f64).collect())
}

/// Bayes omnibus risk `1 / (1 + exp(F₁ − F₀))` and the protected exceedance
/// probabilities `EP·(1 − BOR) + BOR/K`.
pub fn protected_exceedance(result: &BmsResult, exceedance: &[f64]) -> (Vec<f64>, f64) {
    let k = exceedance.len() as f64;
    let diff = result.free_energy - result.null_free_energy;
    let bor = if diff > 0.0 {
        let e = (-diff).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + diff.exp())
    };
    let protected = exceedance.iter().map(|ep| ep * (1.0 - bor) + bor / k).collect();
    (protected, bor)
}

/// Full selection: variational posterior, exceedance and protected exceedance.
pub fn run_bms(evidence: &EvidenceMatrix, options: &BmsOptions) -> Result<BmsResult> {
    let mut result = vb_dirichlet(
        evidence,
        options.prior_alpha,
        options.tolerance,
        options.max_iterations,
    )?;
    let ep = exceedance_probability(&result.dirichlet_alpha, options.samples, options.seed)?;
    let (protected, bor) = protected_exceedance(&result, &ep);
    result.exceedance_probabilities = Some(ep);
    result.protected_exceedance = Some(protected);
    result.bayes_omnibus_risk = Some(bor);
    Ok(result)
}

/// Differences larger than this are shown as this value.
pub const DELTA_DISPLAY_CAP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestModelRow {
    pub participant: String,
    pub best_model: String,
    /// Log-evidence deficit of each model relative to the best, capped at
    /// [`DELTA_DISPLAY_CAP`].
    pub deltas: Vec<f64>,
}

/// Per-participant best model by raw evidence (first model wins ties).
pub fn best_model_table(evidence: &EvidenceMatrix) -> Vec<BestModelRow> {
    evidence
        .participants
        .iter()
        .zip(&evidence.log_evidence)
        .map(|(p, row)| {
            let best = (0..row.len())
                .fold(0, |b, k| if row[k] > row[b] { k } else { b });
            BestModelRow {
                participant: p.clone(),
                best_model: evidence.models[best].clone(),
                deltas: row
                    .iter()
                    .map(|v| (row[best] - v).min(DELTA_DISPLAY_CAP))
                    .collect(),
            }
        })
        .collect()
}
