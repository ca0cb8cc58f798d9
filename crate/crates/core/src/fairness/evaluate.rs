use rayon::prelude::*;

use super::confusion::GroupConfusion;
use super::gaps::{GapSeries, Metric};
use crate::classifier::{DiagnosisModel, LabeledCohort};
use crate::features::WindowSpec;
use crate::ingest::Group;
use crate::scalar::Scalar;

/// Thresholded predictions for every test patient at every censoring window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPredictions {
    pub spec: WindowSpec,
    pub labels: Vec<bool>,
    pub groups: Vec<Group>,
    /// `predictions[i - 1][row]` is the label predicted from window `i`.
    pub predictions: Vec<Vec<bool>>,
}

impl WindowPredictions {
    pub fn compute<T: Scalar>(
        model: &DiagnosisModel<T>,
        test: &LabeledCohort,
        spec: &WindowSpec,
        threshold: T,
    ) -> Self {
        let windows: Vec<u32> = spec.windows().collect();
        let predictions = windows
            .par_iter()
            .map(|&i| model.predict(&test.cohort.histories, spec.cutoff(i), threshold))
            .collect();
        Self {
            spec: *spec,
            labels: test.labels.clone(),
            groups: test.groups(),
            predictions,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn confusions(&self) -> Vec<GroupConfusion> {
        let ones = vec![1u64; self.n_rows()];
        self.weighted_confusions(&ones)
    }

    /// Confusions where row `r` counts `multiplicity[r]` times.
    pub fn weighted_confusions(&self, multiplicity: &[u64]) -> Vec<GroupConfusion> {
        self.predictions
            .iter()
            .map(|preds| {
                let mut c = GroupConfusion::default();
                for (r, &m) in multiplicity.iter().enumerate() {
                    if m > 0 {
                        c.get_mut(self.groups[r]).record(self.labels[r], preds[r], m);
                    }
                }
                c
            })
            .collect()
    }

    pub fn series<T: Scalar>(&self, metric: Metric) -> GapSeries<T> {
        GapSeries::from_confusions(metric, self.spec, &self.confusions())
    }
}

/// Scores the test cohort at each window `1..=b` and returns one metric's gaps.
pub fn gap_series<T: Scalar>(
    model: &DiagnosisModel<T>,
    test: &LabeledCohort,
    spec: &WindowSpec,
    metric: Metric,
    threshold: T,
) -> GapSeries<T> {
    WindowPredictions::compute(model, test, spec, threshold).series(metric)
}
