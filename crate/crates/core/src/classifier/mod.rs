//! Per-phenotype diagnosis classifiers: matched negative sampling, stratified
//! splitting, and L2-penalized logistic regression on one-hot condition codes.

mod logreg;
mod sampling;
mod split;

use std::collections::HashSet;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use logreg::{
    loss_and_gradient, train, LogRegModel, LossGrad, TrainConfig, TrainingMeta, DEFAULT_LAMBDA,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use sampling::{sample_negatives, NegativeMatch, NegativeSample, MAX_AGE_GAP};
pub use split::{stratified_split, SplitIndices, DEFAULT_TEST_FRAC};

use crate::error::{Error, Result};
use crate::features::censor_rows;
use crate::ingest::{CohortHistories, Group, PatientHistory, Vocabulary};
use crate::scalar::Scalar;
use crate::sparse::BinaryCsr;

/// Cases followed by matched controls, with labels aligned to row order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCohort {
    pub cohort: CohortHistories,
    /// `true` for phenotype cases.
    pub labels: Vec<bool>,
}

impl LabeledCohort {
    /// Concatenates positives then negatives; patient ids must not overlap.
    pub fn new(positives: &CohortHistories, negatives: &[PatientHistory]) -> Result<Self> {
        let ids: HashSet<&str> = positives.histories.iter().map(|h| h.patient_id()).collect();
        if let Some(dup) = negatives.iter().find(|h| ids.contains(h.patient_id())) {
            return Err(Error::Validation(format!(
                "patient {} is both a case and a control",
                dup.patient_id()
            )));
        }
        let mut histories = positives.histories.clone();
        histories.extend(negatives.iter().cloned());
        let labels = (0..histories.len())
            .map(|i| i < positives.len())
            .collect();
        Ok(Self {
            cohort: CohortHistories::from_histories(
                positives.phenotype_id.clone(),
                positives.lookback_days,
                histories,
            ),
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn groups(&self) -> Vec<Group> {
        self.cohort.groups()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            cohort: self.cohort.subset(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    pub fn with_swapped_groups(&self) -> Self {
        Self {
            cohort: self.cohort.with_swapped_groups(),
            labels: self.labels.clone(),
        }
    }
}

/// A trained model bound to the vocabulary its weight columns refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisModel<T> {
    pub vocabulary: Vocabulary,
    pub model: LogRegModel<T>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    lambda: T,
    intercept: T,
    weights: Vec<(String, T)>,
    metadata: TrainingMeta<T>,
}

impl<T: Scalar> DiagnosisModel<T> {
    /// Fits on every observation of `train` (no censoring).
    pub fn fit(train: &LabeledCohort, config: &TrainConfig<T>) -> Result<Self> {
        let x = censor_rows(
            &train.cohort.histories,
            &train.cohort.vocabulary,
            train.cohort.lookback_days,
        );
        let model = logreg::train(&x, &train.labels, config)?;
        Ok(Self {
            vocabulary: train.cohort.vocabulary.clone(),
            model,
        })
    }

    /// Features of `rows` censored at `cutoff`, in this model's column order.
    pub fn features(&self, rows: &[PatientHistory], cutoff: u32) -> BinaryCsr {
        censor_rows(rows, &self.vocabulary, cutoff)
    }

    pub fn predict(&self, rows: &[PatientHistory], cutoff: u32, threshold: T) -> Vec<bool> {
        self.model
            .predict(&self.features(rows, cutoff), threshold)
            .expect("features built in model vocabulary")
    }
}

impl<T: Scalar + Serialize + DeserializeOwned> DiagnosisModel<T> {
    /// JSON with weights as `(column label, value)` pairs.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            lambda: self.model.lambda,
            intercept: self.model.intercept,
            weights: self
                .vocabulary
                .codes()
                .iter()
                .cloned()
                .zip(self.model.weights.iter().copied())
                .collect(),
            metadata: self.model.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile<T> = serde_json::from_str(text)?;
        let vocabulary = Vocabulary::from_codes(file.weights.iter().map(|(c, _)| c.as_str()));
        if vocabulary.len() != file.weights.len()
            || vocabulary.codes().iter().zip(&file.weights).any(|(a, (b, _))| a != b)
        {
            return Err(Error::Validation(
                "model weights must be listed once per code in lexicographic order".into(),
            ));
        }
        Ok(Self {
            vocabulary,
            model: LogRegModel {
                weights: file.weights.into_iter().map(|(_, w)| w).collect(),
                intercept: file.intercept,
                lambda: file.lambda,
                meta: file.metadata,
            },
        })
    }
}
