//! Per-condition mean time to diagnosis by group, and disparity aggregates.
//!
//! Differences are always women minus men (`B - A`): a positive diff means
//! women carrying the condition were diagnosed later.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CohortHistories, Group};

pub const DEFAULT_MIN_SUPPORT: usize = 10;
pub const LARGE_DIFF_DAYS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionTtdRow {
    pub condition_code: String,
    pub n_men: usize,
    pub n_women: usize,
    pub mean_ttd_men: f64,
    pub mean_ttd_women: f64,
    /// `mean_ttd_women - mean_ttd_men`, in days.
    pub diff_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparitySummary {
    pub n_conditions: usize,
    /// Fraction of conditions with `diff > 0`; ties count as not later.
    pub frac_women_later: f64,
    pub mean_diff_days: f64,
    pub mean_abs_diff_days: f64,
    /// Fraction of conditions with `|diff| >= 100` days.
    pub frac_over_100d: f64,
}

/// Means of the summary fields across phenotypes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryMeans {
    pub n_conditions: f64,
    pub frac_women_later: f64,
    pub mean_diff_days: f64,
    pub mean_abs_diff_days: f64,
    pub frac_over_100d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPhenotypeSummary {
    pub n_phenotypes: usize,
    /// Every phenotype counts once.
    pub unweighted: SummaryMeans,
    /// Phenotypes weighted by their condition count; equals pooling all rows.
    pub weighted_by_conditions: SummaryMeans,
}

/// One row per condition carried by at least `min_support` patients of each group.
pub fn condition_ttd_table(
    cohort: &CohortHistories,
    min_support: usize,
) -> Result<Vec<ConditionTtdRow>> {
    if min_support < 1 {
        return Err(Error::InvalidArgument("min_support must be at least 1".into()));
    }
    let n_codes = cohort.vocabulary.len();
    // [group][column] -> (count, sum of TTD days)
    let mut acc = vec![vec![(0usize, 0u64); n_codes]; 2];
    for h in &cohort.histories {
        let g = h.group().index();
        for (code, &offset) in &h.observations {
            let col = cohort
                .vocabulary
                .column(code)
                .expect("vocabulary covers every observed code") as usize;
            let ttd = u64::from(cohort.lookback_days.saturating_sub(offset));
            acc[g][col].0 += 1;
            acc[g][col].1 += ttd;
        }
    }
    let mean = |(n, sum): (usize, u64)| sum as f64 / n as f64;
    let mut rows = Vec::new();
    for col in 0..n_codes {
        let men = acc[Group::A.index()][col];
        let women = acc[Group::B.index()][col];
        if men.0 < min_support || women.0 < min_support {
            continue;
        }
        let mean_ttd_men = mean(men);
        let mean_ttd_women = mean(women);
        rows.push(ConditionTtdRow {
            condition_code: cohort.vocabulary.code(col).to_owned(),
            n_men: men.0,
            n_women: women.0,
            mean_ttd_men,
            mean_ttd_women,
            diff_days: mean_ttd_women - mean_ttd_men,
        });
    }
    Ok(rows)
}

pub fn disparity_summary(table: &[ConditionTtdRow]) -> Result<DisparitySummary> {
    if table.is_empty() {
        return Err(Error::EmptyInput(
            "no condition met the per-group support threshold".into(),
        ));
    }
    let n = table.len() as f64;
    let later = table.iter().filter(|r| r.diff_days > 0.0).count();
    let large = table
        .iter()
        .filter(|r| r.diff_days.abs() >= LARGE_DIFF_DAYS)
        .count();
    Ok(DisparitySummary {
        n_conditions: table.len(),
        frac_women_later: later as f64 / n,
        mean_diff_days: table.iter().map(|r| r.diff_days).sum::<f64>() / n,
        mean_abs_diff_days: table.iter().map(|r| r.diff_days.abs()).sum::<f64>() / n,
        frac_over_100d: large as f64 / n,
    })
}

fn weighted_means<'a, I>(items: I) -> SummaryMeans
where
    I: IntoIterator<Item = (f64, &'a DisparitySummary)>,
{
    let mut total = 0.0;
    let mut m = SummaryMeans {
        n_conditions: 0.0,
        frac_women_later: 0.0,
        mean_diff_days: 0.0,
        mean_abs_diff_days: 0.0,
        frac_over_100d: 0.0,
    };
    for (w, s) in items {
        total += w;
        m.n_conditions += w * s.n_conditions as f64;
        m.frac_women_later += w * s.frac_women_later;
        m.mean_diff_days += w * s.mean_diff_days;
        m.mean_abs_diff_days += w * s.mean_abs_diff_days;
        m.frac_over_100d += w * s.frac_over_100d;
    }
    m.n_conditions /= total;
    m.frac_women_later /= total;
    m.mean_diff_days /= total;
    m.mean_abs_diff_days /= total;
    m.frac_over_100d /= total;
    m
}

pub fn cross_phenotype_summary<S: AsRef<str>>(
    per_phenotype: &[(S, DisparitySummary)],
) -> Result<CrossPhenotypeSummary> {
    if per_phenotype.is_empty() {
        return Err(Error::EmptyInput("no phenotype summaries to combine".into()));
    }
    Ok(CrossPhenotypeSummary {
        n_phenotypes: per_phenotype.len(),
        unweighted: weighted_means(per_phenotype.iter().map(|(_, s)| (1.0, s))),
        weighted_by_conditions: weighted_means(
            per_phenotype.iter().map(|(_, s)| (s.n_conditions as f64, s)),
        ),
    })
}

/// Writes the table as `condition_code,n_men,n_women,mean_ttd_men,mean_ttd_women,diff_days`.
pub fn write_table_csv<W: Write>(rows: &[ConditionTtdRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<ttd table>", e))?;
    Ok(())
}
