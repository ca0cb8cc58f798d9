//! Right-censored binary feature matrices over growing observation windows.
//!
//! Window `i` (1-based) exposes every condition whose day offset is at or
//! before `min(i * w, horizon)`. The last window therefore exposes the full
//! history.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CohortHistories, PatientHistory, Vocabulary, DEFAULT_LOOKBACK_DAYS};
use crate::sparse::BinaryCsr;

pub const DEFAULT_WINDOW_DAYS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub horizon_days: u32,
    pub window_days: u32,
    pub n_windows: u32,
}

impl WindowSpec {
    /// Inclusive day cutoff of window `i`.
    pub fn cutoff(&self, i: u32) -> u32 {
        (i.saturating_mul(self.window_days)).min(self.horizon_days)
    }

    pub fn windows(&self) -> impl Iterator<Item = u32> {
        1..=self.n_windows
    }

    fn check_index(&self, i: u32) -> Result<()> {
        if i == 0 || i > self.n_windows {
            return Err(Error::InvalidArgument(format!(
                "window index {i} outside 1..={}",
                self.n_windows
            )));
        }
        Ok(())
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        make_window_spec(DEFAULT_LOOKBACK_DAYS, DEFAULT_WINDOW_DAYS).expect("valid defaults")
    }
}

/// `n_windows = ceil(horizon_days / window_days)`.
pub fn make_window_spec(horizon_days: u32, window_days: u32) -> Result<WindowSpec> {
    if window_days < 1 {
        return Err(Error::InvalidArgument("window size must be at least 1 day".into()));
    }
    if horizon_days < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1 day".into()));
    }
    Ok(WindowSpec {
        horizon_days,
        window_days,
        n_windows: horizon_days.div_ceil(window_days),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensoredFeatureMatrix {
    /// `None` for the uncensored matrix.
    pub window_index: Option<u32>,
    pub cutoff_day: u32,
    pub row_ids: Arc<[String]>,
    pub columns: Arc<Vocabulary>,
    pub matrix: BinaryCsr,
}

#[derive(Serialize)]
struct MatrixLabels<'a> {
    window_index: Option<u32>,
    cutoff_day: u32,
    rows: &'a [String],
    columns: &'a Vocabulary,
}

impl CensoredFeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    /// Debug dump: `row,col,1` triplets plus a JSON sidecar of row and column labels.
    pub fn dump<W1: Write, W2: Write>(&self, triplets: W1, labels: W2) -> Result<()> {
        self.matrix
            .write_triplets(triplets)
            .map_err(|e| Error::io("<triplets>", e))?;
        serde_json::to_writer_pretty(
            labels,
            &MatrixLabels {
                window_index: self.window_index,
                cutoff_day: self.cutoff_day,
                rows: &self.row_ids,
                columns: &self.columns,
            },
        )?;
        Ok(())
    }
}

/// Binary matrix of `rows` over `columns`, keeping codes with offset `<= cutoff`.
/// Codes absent from `columns` are dropped.
pub fn censor_rows(rows: &[PatientHistory], columns: &Vocabulary, cutoff: u32) -> BinaryCsr {
    BinaryCsr::from_rows(
        columns.len(),
        rows.iter().map(|h| {
            h.observations
                .iter()
                .filter(|(_, &offset)| offset <= cutoff)
                .filter_map(|(code, _)| columns.column(code))
                .collect()
        }),
    )
    .expect("columns come from the vocabulary")
}

fn row_ids(cohort: &CohortHistories) -> Arc<[String]> {
    cohort
        .histories
        .iter()
        .map(|h| h.patient_id().to_owned())
        .collect()
}

/// Window `i` matrix in the cohort's own vocabulary.
pub fn censored_matrix(
    cohort: &CohortHistories,
    spec: &WindowSpec,
    i: u32,
) -> Result<CensoredFeatureMatrix> {
    spec.check_index(i)?;
    let cutoff = spec.cutoff(i);
    Ok(CensoredFeatureMatrix {
        window_index: Some(i),
        cutoff_day: cutoff,
        row_ids: row_ids(cohort),
        columns: Arc::new(cohort.vocabulary.clone()),
        matrix: censor_rows(&cohort.histories, &cohort.vocabulary, cutoff),
    })
}

/// All windows `1..=b`, sharing row and column labels.
pub fn censored_matrices(
    cohort: &CohortHistories,
    spec: &WindowSpec,
) -> Vec<CensoredFeatureMatrix> {
    let rows = row_ids(cohort);
    let columns = Arc::new(cohort.vocabulary.clone());
    spec.windows()
        .map(|i| {
            let cutoff = spec.cutoff(i);
            CensoredFeatureMatrix {
                window_index: Some(i),
                cutoff_day: cutoff,
                row_ids: Arc::clone(&rows),
                columns: Arc::clone(&columns),
                matrix: censor_rows(&cohort.histories, &columns, cutoff),
            }
        })
        .collect()
}

/// Every observation up to and including the diagnosis day.
pub fn full_matrix(cohort: &CohortHistories) -> CensoredFeatureMatrix {
    CensoredFeatureMatrix {
        window_index: None,
        cutoff_day: cohort.lookback_days,
        row_ids: row_ids(cohort),
        columns: Arc::new(cohort.vocabulary.clone()),
        matrix: censor_rows(&cohort.histories, &cohort.vocabulary, cohort.lookback_days),
    }
}
