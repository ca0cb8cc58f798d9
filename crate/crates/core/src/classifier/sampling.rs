use std::collections::{BTreeMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CohortHistories, Group, PatientHistory};

/// Largest allowed age difference between a case and its control, in years.
pub const MAX_AGE_GAP: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeMatch {
    pub positive_id: String,
    pub control_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSample {
    pub negatives: Vec<PatientHistory>,
    pub matches: Vec<NegativeMatch>,
    /// Cases that received fewer than the requested number of controls.
    pub unmatched: Vec<String>,
}

impl NegativeSample {
    /// Re-checks every recorded match: same group, age gap within bounds,
    /// control used once and drawn from outside the case cohort.
    pub fn verify(&self, positives: &CohortHistories) -> Result<()> {
        let cases: BTreeMap<&str, &PatientHistory> = positives
            .histories
            .iter()
            .map(|h| (h.patient_id(), h))
            .collect();
        let controls: BTreeMap<&str, &PatientHistory> = self
            .negatives
            .iter()
            .map(|h| (h.patient_id(), h))
            .collect();
        if controls.len() != self.negatives.len() || self.matches.len() != self.negatives.len() {
            return Err(Error::Validation("controls must be distinct and each matched once".into()));
        }
        for m in &self.matches {
            let (Some(case), Some(control)) = (
                cases.get(m.positive_id.as_str()),
                controls.get(m.control_id.as_str()),
            ) else {
                return Err(Error::Validation(format!(
                    "match {} -> {} references an unknown patient",
                    m.positive_id, m.control_id
                )));
            };
            if cases.contains_key(m.control_id.as_str()) {
                return Err(Error::Validation(format!("control {} is a case", m.control_id)));
            }
            if case.group() != control.group()
                || case.member.age_at_index.abs_diff(control.member.age_at_index) > MAX_AGE_GAP
            {
                return Err(Error::Validation(format!(
                    "control {} does not match case {}",
                    m.control_id, m.positive_id
                )));
            }
        }
        Ok(())
    }
}

/// Draws up to `ratio` controls per case from `pool`, uniformly and without
/// replacement among unused candidates of the same group within
/// [`MAX_AGE_GAP`] years. Cases are processed in cohort order.
pub fn sample_negatives(
    positives: &CohortHistories,
    pool: &[PatientHistory],
    ratio: usize,
    seed: u64,
) -> Result<NegativeSample> {
    if ratio < 1 {
        return Err(Error::InvalidArgument("negative ratio must be at least 1".into()));
    }
    let case_ids: HashSet<&str> = positives.histories.iter().map(|h| h.patient_id()).collect();
    let mut seen = HashSet::new();
    for h in pool {
        if case_ids.contains(h.patient_id()) {
            return Err(Error::InvalidArgument(format!(
                "candidate pool contains case {}",
                h.patient_id()
            )));
        }
        if !seen.insert(h.patient_id()) {
            return Err(Error::InvalidArgument(format!(
                "candidate pool lists patient {} twice",
                h.patient_id()
            )));
        }
    }

    let mut buckets: BTreeMap<(Group, u32), Vec<usize>> = BTreeMap::new();
    for (i, h) in pool.iter().enumerate() {
        buckets
            .entry((h.group(), h.member.age_at_index))
            .or_default()
            .push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = NegativeSample {
        negatives: Vec::new(),
        matches: Vec::new(),
        unmatched: Vec::new(),
    };
    for case in &positives.histories {
        let age = case.member.age_at_index;
        let lo = (case.group(), age.saturating_sub(MAX_AGE_GAP));
        let hi = (case.group(), age + MAX_AGE_GAP);
        let eligible: Vec<usize> = buckets
            .range(lo..=hi)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        let k = ratio.min(eligible.len());
        let mut picks: Vec<usize> = rand::seq::index::sample(&mut rng, eligible.len(), k)
            .into_iter()
            .map(|j| eligible[j])
            .collect();
        picks.sort_unstable();
        for &p in &picks {
            let control = &pool[p];
            if let Some(bucket) = buckets.get_mut(&(control.group(), control.member.age_at_index)) {
                bucket.retain(|&i| i != p);
            }
            out.negatives.push(control.clone());
            out.matches.push(NegativeMatch {
                positive_id: case.patient_id().to_owned(),
                control_id: control.patient_id().to_owned(),
            });
        }
        if k < ratio {
            out.unmatched.push(case.patient_id().to_owned());
        }
    }
    if !out.unmatched.is_empty() {
        log::warn!(
            "{}: {} cases received fewer than {ratio} matched controls",
            positives.phenotype_id,
            out.unmatched.len()
        );
    }
    Ok(out)
}
