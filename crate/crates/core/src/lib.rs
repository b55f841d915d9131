//! Predictive models of human choice built on language-model embeddings.
//!
//! The pipeline renders each decision as a text prompt ([`prompt`]), reads the
//! corresponding embedding vectors ([`embedding`]), and fits an L2-regularized
//! logistic readout with nested cross-validation ([`readout`]). Reference models
//! live in [`baselines`], figure-level behavioral analyses in [`analysis`], and
//! random-effects Bayesian model selection in [`bms`].

pub mod analysis;
pub mod baselines;
pub mod bms;
pub mod embedding;
mod error;
pub mod numeric;
pub mod optim;
pub mod prompt;
pub mod readout;
pub mod synthetic;
pub mod task;

pub use error::{Error, Result};
