use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EmbeddingStore;
use crate::error::{Error, Result};
use crate::numeric::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Independent standard-normal entries.
    GaussianNoise,
    /// Latent standard-normal vectors `z` with choice probability `σ(z·w)`;
    /// the stored embedding is `z` plus Gaussian noise of the given SD.
    LinearLatent { true_weights: Vec<f64>, noise_sd: f64 },
}

/// Deterministic synthetic embeddings. For [`Generator::LinearLatent`] the
/// generating choice probabilities are returned alongside the store, in the
/// order of `trial_ids`.
pub fn synth_embeddings(
    trial_ids: &[String],
    dim: usize,
    seed: u64,
    generator: &Generator,
) -> Result<(EmbeddingStore, Option<Vec<f64>>)> {
    if dim == 0 {
        return Err(Error::Config("synthetic embedding dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(trial_ids.len() * dim);
    let provenance = format!("synthetic generator={} seed={seed}", generator.name());

    match generator {
        Generator::GaussianNoise => {
            values.extend((0..trial_ids.len() * dim).map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v as f32
            }));
            let store = EmbeddingStore::new(dim, trial_ids.to_vec(), values, provenance)?;
            Ok((store, None))
        }
        Generator::LinearLatent {
            true_weights,
            noise_sd,
        } => {
            if true_weights.len() != dim {
                return Err(Error::Config(format!(
                    "{} true weights for dimension {dim}",
                    true_weights.len()
                )));
            }
            if !noise_sd.is_finite() || *noise_sd < 0.0 {
                return Err(Error::Config(format!("invalid noise_sd {noise_sd}")));
            }
            let mut probabilities = Vec::with_capacity(trial_ids.len());
            for _ in trial_ids {
                let mut logit = 0.0;
                for &w in true_weights {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let z = f64::from(z as f32);
                    logit += z * w;
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    values.push((z + noise_sd * noise) as f32);
                }
                probabilities.push(sigmoid(logit));
            }
            let store = EmbeddingStore::new(dim, trial_ids.to_vec(), values, provenance)?;
            Ok((store, Some(probabilities)))
        }
    }
}

/// `dim` weights drawn i.i.d. from N(0, scale² / dim), so a standard-normal
/// latent row has logit variance `scale²`.
pub fn sample_weights(dim: usize, scale: f64, seed: u64) -> Result<Vec<f64>> {
    if dim == 0 || !scale.is_finite() || scale < 0.0 {
        return Err(Error::Config(format!("invalid weight dimension {dim} or scale {scale}")));
    }
    let sd = scale / (dim as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect())
}

impl Generator {
    fn name(&self) -> &'static str {
        match self {
            Generator::GaussianNoise => "gaussian_noise",
            Generator::LinearLatent { .. } => "linear_latent",
        }
    }
}
