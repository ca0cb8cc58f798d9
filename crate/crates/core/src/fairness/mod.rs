//! Time-variant fairness audit: per-window group confusions, fairness gaps
//! (men minus women), mean squared discrimination, gap trends and
//! patient-level bootstrap intervals.

mod bootstrap;
mod confusion;
mod evaluate;
mod gaps;
mod msd;
mod trend;

pub use bootstrap::{
    bootstrap_from_predictions, bootstrap_msd, BootstrapConfig, DEFAULT_ALPHA, DEFAULT_RESAMPLES,
};
pub use confusion::{confusion_by_group, Confusion, GroupConfusion};
pub use evaluate::{gap_series, WindowPredictions};
pub use gaps::{gap, GapSeries, Metric};
pub use msd::{msd, msd_of_values, ConfidenceInterval, MsdResult};
pub use trend::{gap_trend, ols_fit, TrendFit};
