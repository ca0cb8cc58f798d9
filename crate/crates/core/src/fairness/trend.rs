use serde::{Deserialize, Serialize};

use super::gaps::GapSeries;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares line through `(window index, gap)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit<T> {
    /// Gap change per window step.
    pub slope: T,
    pub intercept: T,
    pub n_points: usize,
}

/// Ordinary least squares on centered data.
pub fn ols_fit<T: Scalar>(points: &[(T, T)]) -> Result<TrendFit<T>> {
    if points.len() < 2 {
        return Err(Error::Insufficient(format!(
            "trend fit needs at least 2 defined windows, got {}",
            points.len()
        )));
    }
    let n = T::from_count(points.len());
    let x_mean = points.iter().map(|p| p.0).sum::<T>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<T>() / n;
    let (sxy, sxx) = points.iter().fold((T::zero(), T::zero()), |(sxy, sxx), &(x, y)| {
        let dx = x - x_mean;
        (sxy + dx * (y - y_mean), sxx + dx * dx)
    });
    if sxx == T::zero() {
        return Err(Error::Insufficient("trend fit needs at least 2 distinct windows".into()));
    }
    let slope = sxy / sxx;
    Ok(TrendFit {
        slope,
        intercept: y_mean - slope * x_mean,
        n_points: points.len(),
    })
}

/// Fits the defined windows of `series`; window indices are 1-based.
pub fn gap_trend<T: Scalar>(series: &GapSeries<T>) -> Result<TrendFit<T>> {
    let points: Vec<(T, T)> = series
        .defined()
        .into_iter()
        .map(|(i, g)| (T::lit(f64::from(i)), g))
        .collect();
    ols_fit(&points)
}
