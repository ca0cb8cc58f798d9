use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledCohort;
use crate::error::{Error, Result};
use crate::ingest::Group;

pub const DEFAULT_TEST_FRAC: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
}

/// Splits within each (group, label) stratum so both sides keep the cohort's
/// group and class proportions. Each stratum sends `round(n * test_frac)`
/// rows to test, clamped so both sides get at least one.
pub fn stratified_split(cohort: &LabeledCohort, test_frac: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_frac} outside (0, 1)"
        )));
    }
    let groups = cohort.groups();
    let mut strata: [[Vec<usize>; 2]; 2] = Default::default();
    for (row, (&g, &label)) in groups.iter().zip(&cohort.labels).enumerate() {
        strata[g.index()][usize::from(label)].push(row);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for g in Group::ALL {
        for label in [false, true] {
            let mut rows = std::mem::take(&mut strata[g.index()][usize::from(label)]);
            if rows.is_empty() {
                continue;
            }
            if rows.len() < 2 {
                return Err(Error::Insufficient(format!(
                    "stratum ({}, {}) has {} member; stratification needs at least 2",
                    g.label(),
                    if label { "case" } else { "control" },
                    rows.len()
                )));
            }
            let n_test = ((rows.len() as f64 * test_frac).round() as usize).clamp(1, rows.len() - 1);
            rows.shuffle(&mut rng);
            test_rows.extend_from_slice(&rows[..n_test]);
            train_rows.extend_from_slice(&rows[n_test..]);
        }
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitIndices {
        train_rows,
        test_rows,
        seed,
    })
}
