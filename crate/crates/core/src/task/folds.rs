use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train / validation / test fractions of the 100-fold protocol.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.90, 0.09, 0.01];

const FRACTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub fold_count: usize,
    pub fractions: [f64; 3],
    pub folds: Vec<Fold>,
}

/// Shuffles `trial_ids` with a seeded generator and cuts each fold's test set
/// as a contiguous block of the shuffled order; the validation block follows
/// the test block (wrapping around), and the remainder is training data.
///
/// When `fold_count * test_fraction == 1` the test blocks tile the shuffled
/// order, so every trial is tested exactly once.
pub fn make_fold_plan(
    trial_ids: &[String],
    fold_count: usize,
    fractions: [f64; 3],
    seed: u64,
) -> Result<FoldPlan> {
    if fold_count == 0 {
        return Err(Error::Config("fold_count must be positive".into()));
    }
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::Config(format!("invalid fold fractions {fractions:?}")));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > FRACTION_TOLERANCE {
        return Err(Error::Config(format!(
            "fold fractions {fractions:?} sum to {sum}, not 1"
        )));
    }
    let [_, val_frac, test_frac] = fractions;
    if fold_count as f64 * test_frac > 1.0 + FRACTION_TOLERANCE {
        return Err(Error::Config(format!(
            "{fold_count} folds with test fraction {test_frac} would reuse test trials"
        )));
    }

    let mut order: Vec<&String> = trial_ids.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n = order.len();
    let boundary = |k: usize| -> usize {
        let raw = k as f64 * n as f64 * test_frac;
        ((raw + 1e-7).floor() as usize).min(n)
    };

    let folds = (0..fold_count)
        .map(|k| {
            let (start, end) = (boundary(k), boundary(k + 1));
            let n_test = end - start;
            let test_error = n_test as f64 - n as f64 * test_frac;
            let rest = n - n_test;
            let n_val = ((n as f64 * val_frac - test_error / 2.0).round().max(0.0) as usize).min(rest);

            let mut fold = Fold {
                train: Vec::with_capacity(rest - n_val),
                validation: Vec::with_capacity(n_val),
                test: Vec::with_capacity(n_test),
            };
            for offset in 0..n {
                let id = order[(start + offset) % n].clone();
                if offset < n_test {
                    fold.test.push(id);
                } else if offset < n_test + n_val {
                    fold.validation.push(id);
                } else {
                    fold.train.push(id);
                }
            }
            fold
        })
        .collect();

    Ok(FoldPlan {
        seed,
        fold_count,
        fractions,
        folds,
    })
}
