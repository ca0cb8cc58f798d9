use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::WindowPredictions;
use super::gaps::{GapSeries, Metric};
use super::msd::{msd_of_values, ConfidenceInterval, MsdResult};
use crate::classifier::{DiagnosisModel, LabeledCohort};
use crate::error::{Error, Result};
use crate::features::WindowSpec;
use crate::scalar::Scalar;
use crate::seeds::derive_seed;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: DEFAULT_RESAMPLES,
            alpha: DEFAULT_ALPHA,
            seed: 0,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile<T: Scalar>(sorted: &[T], p: f64) -> T {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::lit(h - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Row multiplicities of one group-stratified resample.
///
/// Strata are visited in order of their first row, so the draw depends only
/// on the partition of rows, not on which label each part carries.
fn resample_multiplicity(preds: &WindowPredictions, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut strata: Vec<Vec<usize>> = Vec::new();
    let mut order = Vec::new();
    for (row, &g) in preds.groups.iter().enumerate() {
        match order.iter().position(|&seen| seen == g) {
            Some(k) => strata[k].push(row),
            None => {
                order.push(g);
                strata.push(vec![row]);
            }
        }
    }
    let mut multiplicity = vec![0u64; preds.n_rows()];
    for rows in &strata {
        for _ in 0..rows.len() {
            multiplicity[rows[rng.random_range(0..rows.len())]] += 1;
        }
    }
    multiplicity
}

/// Percentile bootstrap of MSD over patients, resampled with replacement
/// within each group. Resample `r` draws from its own stream seeded by
/// `derive_seed(seed, r)`.
pub fn bootstrap_from_predictions<T: Scalar>(
    preds: &WindowPredictions,
    metric: Metric,
    config: &BootstrapConfig,
) -> Result<MsdResult<T>> {
    if config.n_resamples < 1 {
        return Err(Error::InvalidArgument("n_resamples must be at least 1".into()));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {} outside (0, 1)",
            config.alpha
        )));
    }
    let mut point = msd_of_values(&preds.series::<T>(metric).values)?;
    let draws: Vec<Option<T>> = (0..config.n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, r as u64));
            let multiplicity = resample_multiplicity(preds, &mut rng);
            let confusions = preds.weighted_confusions(&multiplicity);
            let series = GapSeries::<T>::from_confusions(metric, preds.spec, &confusions);
            msd_of_values(&series.values).ok().map(|m| m.msd)
        })
        .collect();
    let mut kept: Vec<T> = draws.into_iter().flatten().collect();
    let n_discarded = config.n_resamples - kept.len();
    if n_discarded * 2 > config.n_resamples {
        return Err(Error::Insufficient(format!(
            "{n_discarded} of {} bootstrap resamples had no defined window",
            config.n_resamples
        )));
    }
    kept.sort_by(|a, b| a.partial_cmp(b).expect("finite MSD values"));
    point.ci = Some(ConfidenceInterval {
        low: quantile(&kept, config.alpha / 2.0),
        high: quantile(&kept, 1.0 - config.alpha / 2.0),
        level: 1.0 - config.alpha,
        n_resamples: config.n_resamples,
        n_discarded,
    });
    Ok(point)
}

pub fn bootstrap_msd<T: Scalar>(
    model: &DiagnosisModel<T>,
    test: &LabeledCohort,
    spec: &WindowSpec,
    metric: Metric,
    threshold: T,
    config: &BootstrapConfig,
) -> Result<MsdResult<T>> {
    let preds = WindowPredictions::compute(model, test, spec, threshold);
    bootstrap_from_predictions(&preds, metric, config)
}
