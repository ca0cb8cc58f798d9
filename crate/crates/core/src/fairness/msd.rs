use serde::{Deserialize, Serialize};

use super::gaps::GapSeries;
use crate::error::{Error, Result};
use crate::scalar::{sign, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval<T> {
    pub low: T,
    pub high: T,
    pub level: f64,
    pub n_resamples: usize,
    /// Resamples dropped because every window was undefined.
    pub n_discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsdResult<T> {
    pub msd: T,
    pub mean_gap: T,
    pub mse: T,
    pub n_windows_used: usize,
    pub ci: Option<ConfidenceInterval<T>>,
}

/// Mean squared discrimination over the defined gaps:
/// `sign(mean(g)) * mean(g^2)`, with `sign(0) = 0`.
pub fn msd_of_values<T: Scalar>(values: &[Option<T>]) -> Result<MsdResult<T>> {
    let defined: Vec<T> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Insufficient(
            "every window gap is undefined; MSD needs at least one".into(),
        ));
    }
    let n = T::from_count(defined.len());
    let mean_gap = defined.iter().copied().sum::<T>() / n;
    let mse = defined.iter().map(|&g| g * g).sum::<T>() / n;
    Ok(MsdResult {
        msd: sign(mean_gap) * mse,
        mean_gap,
        mse,
        n_windows_used: defined.len(),
        ci: None,
    })
}

pub fn msd<T: Scalar>(series: &GapSeries<T>) -> Result<MsdResult<T>> {
    msd_of_values(&series.values)
}
