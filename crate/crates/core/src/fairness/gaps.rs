use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::confusion::{Confusion, GroupConfusion};
use crate::features::WindowSpec;
use crate::ingest::Group;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Recall,
    Specificity,
    Precision,
    Accuracy,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Recall,
        Metric::Specificity,
        Metric::Precision,
        Metric::Accuracy,
    ];

    /// Metrics reported when none are requested; accuracy is opt-in.
    pub const DEFAULT: [Metric; 3] = [Metric::Recall, Metric::Specificity, Metric::Precision];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Recall => "recall",
            Metric::Specificity => "specificity",
            Metric::Precision => "precision",
            Metric::Accuracy => "accuracy",
        }
    }

    /// The metric for one group, or `None` when its denominator is zero.
    pub fn rate<T: Scalar>(self, c: &Confusion) -> Option<T> {
        let (num, den) = match self {
            Metric::Recall => (c.tp, c.tp + c.fn_),
            Metric::Specificity => (c.tn, c.tn + c.fp),
            Metric::Precision => (c.tp, c.tp + c.fp),
            Metric::Accuracy => (c.tp + c.tn, c.total()),
        };
        (den > 0).then(|| T::lit(num as f64) / T::lit(den as f64))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// Men minus women; `None` if either group's denominator is zero.
pub fn gap<T: Scalar>(metric: Metric, conf: &GroupConfusion) -> Option<T> {
    let men = metric.rate::<T>(conf.get(Group::A))?;
    let women = metric.rate::<T>(conf.get(Group::B))?;
    Some(men - women)
}

/// Per-window gaps `g_1 .. g_b` of one metric. Undefined windows stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSeries<T> {
    pub metric: Metric,
    pub spec: WindowSpec,
    pub values: Vec<Option<T>>,
    /// Per-window `[men, women]` metric values.
    pub rates: Vec<[Option<T>; 2]>,
}

impl<T: Scalar> GapSeries<T> {
    pub fn from_confusions(metric: Metric, spec: WindowSpec, confusions: &[GroupConfusion]) -> Self {
        let rates: Vec<[Option<T>; 2]> = confusions
            .iter()
            .map(|c| [metric.rate(&c.men), metric.rate(&c.women)])
            .collect();
        let values = rates
            .iter()
            .map(|[m, w]| match (m, w) {
                (Some(m), Some(w)) => Some(*m - *w),
                _ => None,
            })
            .collect();
        Self {
            metric,
            spec,
            values,
            rates,
        }
    }

    /// `(window index, gap)` for defined windows, 1-based.
    pub fn defined(&self) -> Vec<(u32, T)> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|g| (i as u32 + 1, g)))
            .collect()
    }

    pub fn n_defined(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(tp: u64, fp: u64, tn: u64, fn_: u64) -> Confusion {
        Confusion { tp, fp, tn, fn_ }
    }

    #[test]
    fn recall_gap_example() {
        let c = GroupConfusion {
            men: conf(8, 0, 0, 2),
            women: conf(6, 0, 0, 4),
        };
        let g: f64 = gap(Metric::Recall, &c).unwrap();
        assert!((g - 0.2).abs() < 1e-15);
    }

    #[test]
    fn identical_groups_have_zero_gaps() {
        let c = GroupConfusion {
            men: conf(3, 2, 7, 1),
            women: conf(3, 2, 7, 1),
        };
        for m in Metric::ALL {
            assert_eq!(gap::<f64>(m, &c), Some(0.0));
        }
    }

    #[test]
    fn zero_denominator_is_undefined() {
        let c = GroupConfusion {
            men: conf(0, 3, 4, 0),
            women: conf(2, 1, 1, 1),
        };
        assert_eq!(gap::<f64>(Metric::Recall, &c), None);
        assert!(gap::<f64>(Metric::Specificity, &c).is_some());
        let no_pred = GroupConfusion {
            men: conf(0, 0, 4, 2),
            women: conf(1, 0, 1, 1),
        };
        assert_eq!(gap::<f64>(Metric::Precision, &no_pred), None);
    }

    #[test]
    fn rates_match_definitions() {
        let c = conf(6, 2, 9, 3);
        assert_eq!(Metric::Recall.rate::<f64>(&c), Some(6.0 / 9.0));
        assert_eq!(Metric::Specificity.rate::<f64>(&c), Some(9.0 / 11.0));
        assert_eq!(Metric::Precision.rate::<f64>(&c), Some(6.0 / 8.0));
        assert_eq!(Metric::Accuracy.rate::<f64>(&c), Some(15.0 / 20.0));
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("f1".parse::<Metric>().is_err());
    }
}
