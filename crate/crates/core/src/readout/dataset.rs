use std::collections::HashMap;

use ndarray::{Array2, Axis};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::task::ChoiceTrial;

/// Feature rows with their choice counts, ready for fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub x: Array2<f64>,
    /// Choices of option 1 per row.
    pub ones: Vec<f64>,
    /// Choices of option 2 per row.
    pub twos: Vec<f64>,
    pub participants: Vec<Option<String>>,
}

impl Dataset {
    /// Embedding rows for `trials`, in trial order. Fails listing every trial
    /// without an embedding.
    pub fn from_store(store: &EmbeddingStore, trials: &[ChoiceTrial]) -> Result<Self> {
        let ids: Vec<&str> = trials.iter().map(|t| t.trial_id.as_str()).collect();
        let x = store.matrix(&ids)?;
        Self::from_features(trials, x)
    }

    pub fn from_features(trials: &[ChoiceTrial], x: Array2<f64>) -> Result<Self> {
        if x.nrows() != trials.len() {
            return Err(Error::Shape {
                expected: format!("{} rows", trials.len()),
                actual: format!("{} rows", x.nrows()),
            });
        }
        Ok(Self {
            ids: trials.iter().map(|t| t.trial_id.clone()).collect(),
            x: x.as_standard_layout().into_owned(),
            ones: trials.iter().map(|t| f64::from(t.choice_count_1)).collect(),
            twos: trials.iter().map(|t| f64::from(t.choice_count_2())).collect(),
            participants: trials.iter().map(|t| t.participant_id.clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Total number of recorded choices.
    pub fn total_weight(&self) -> f64 {
        self.ones.iter().zip(&self.twos).map(|(a, b)| a + b).sum()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            x: self.x.select(Axis(0), rows),
            ones: rows.iter().map(|&i| self.ones[i]).collect(),
            twos: rows.iter().map(|&i| self.twos[i]).collect(),
            participants: rows.iter().map(|&i| self.participants[i].clone()).collect(),
        }
    }

    /// Concatenates datasets with equal feature dimension.
    pub fn concat(parts: &[Dataset]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::Config("nothing to concatenate".into()));
        };
        if let Some(bad) = parts.iter().find(|p| p.dim() != first.dim()) {
            return Err(Error::Shape {
                expected: format!("dimension {}", first.dim()),
                actual: format!("dimension {}", bad.dim()),
            });
        }
        let views: Vec<_> = parts.iter().map(|p| p.x.view()).collect();
        Ok(Self {
            ids: parts.iter().flat_map(|p| p.ids.iter().cloned()).collect(),
            x: ndarray::concatenate(Axis(0), &views).expect("equal widths"),
            ones: parts.iter().flat_map(|p| p.ones.iter().copied()).collect(),
            twos: parts.iter().flat_map(|p| p.twos.iter().copied()).collect(),
            participants: parts
                .iter()
                .flat_map(|p| p.participants.iter().cloned())
                .collect(),
        })
    }

    /// Row positions for `ids`; fails on ids not in the dataset.
    pub fn positions<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        let index: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut missing = Vec::new();
        let rows = ids
            .iter()
            .filter_map(|id| {
                let found = index.get(id.as_ref()).copied();
                if found.is_none() {
                    missing.push(id.as_ref().to_string());
                }
                found
            })
            .collect();
        if missing.is_empty() {
            Ok(rows)
        } else {
            Err(Error::Data(format!(
                "fold plan names {} trial(s) absent from the dataset, e.g. {}",
                missing.len(),
                missing[0]
            )))
        }
    }
}
