//! The linear readout: penalized logistic regression on embedding rows,
//! fitted by LBFGS inside nested cross-validation.

mod cv;
mod dataset;
mod fit;
mod model;
mod report;
mod transfer;

pub use cv::{cross_validate, fit_random_effects, nested_cv_fit, select_best, CvOptions, DEFAULT_ALPHA_GRID};
pub use dataset::Dataset;
pub use fit::{fit_logistic, participant_roster, FitOptions, FitOutcome};
pub use model::{nll_and_grad, ReadoutGradient, ReadoutModel};
pub use report::{FitReport, FoldRecord, GridPoint, TestPrediction, TrainingFit};
pub use transfer::{holdout_fold_plan, transfer_fit, TransferOptions, DEFAULT_TEMPERATURE_GRID};
