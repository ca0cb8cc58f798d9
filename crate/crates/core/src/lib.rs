//! Time-to-diagnosis disparity analysis and time-variant fairness auditing of
//! diagnosis classifiers on longitudinal condition records.
//!
//! The pipeline:
//!
//! 1. [`ingest`] aligns condition events onto a day-offset timeline ending at
//!    each patient's phenotype diagnosis date.
//! 2. [`ttd`] compares mean time to diagnosis per condition between men and
//!    women.
//! 3. [`features`] builds right-censored binary matrices for growing windows
//!    of patient history.
//! 4. [`classifier`] trains an L2-penalized logistic regression on matched
//!    cases and controls.
//! 5. [`fairness`] tracks recall, specificity, precision and accuracy gaps
//!    across windows and summarizes them with mean squared discrimination.
//!
//! Numeric kernels are generic over [`Scalar`]; the `*64` / `*32` aliases
//! below fix the precision.

pub mod classifier;
pub mod error;
pub mod fairness;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod scalar;
pub mod seeds;
pub mod sparse;
pub mod synth;
pub mod ttd;

pub use error::{Error, ErrorKind, Result};
pub use ingest::{CohortHistories, CohortMember, ConditionEvent, Group, PatientHistory, Vocabulary};
pub use scalar::Scalar;

pub type LogRegModel64 = classifier::LogRegModel<f64>;
pub type LogRegModel32 = classifier::LogRegModel<f32>;
pub type DiagnosisModel64 = classifier::DiagnosisModel<f64>;
pub type DiagnosisModel32 = classifier::DiagnosisModel<f32>;
pub type TrainConfig64 = classifier::TrainConfig<f64>;
pub type TrainConfig32 = classifier::TrainConfig<f32>;
pub type GapSeries64 = fairness::GapSeries<f64>;
pub type GapSeries32 = fairness::GapSeries<f32>;
pub type MsdResult64 = fairness::MsdResult<f64>;
pub type MsdResult32 = fairness::MsdResult<f32>;
pub type TrendFit64 = fairness::TrendFit<f64>;
pub type TrendFit32 = fairness::TrendFit<f32>;
