//! Synthetic multi-phenotype cohorts with controllable group timing of
//! disease-informative ("signal") codes.
//!
//! Every phenotype `phNN` has its own signal codes `phNN_SJJ`; noise codes
//! `NKKK` are shared by all patients. Control cohorts `ctlNN` are sibling
//! cohorts whose members carry noise codes only. Each patient belongs to
//! exactly one cohort, so the other cohorts act as the control pool. Signal time to
//! diagnosis follows a normal distribution truncated to `[0, lookback]` and
//! rounded to whole days; noise codes are uniform over the lookback.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Group, DEFAULT_LOOKBACK_DAYS, MIN_AGE};
use crate::seeds::named_seed;

const MAX_AGE: f64 = 90.0;
const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_phenotypes: usize,
    /// Extra sibling cohorts without signal codes.
    pub control_cohorts: usize,
    /// Members per cohort and group.
    pub patients_per_group: usize,
    pub n_signal_codes: usize,
    pub n_noise_codes: usize,
    /// Probability that a case carries each of its phenotype's signal codes.
    pub signal_rate: f64,
    /// Mean days between a signal code and diagnosis, men.
    pub signal_ttd_mean_men: f64,
    /// Mean days between a signal code and diagnosis, women.
    pub signal_ttd_mean_women: f64,
    pub signal_ttd_sd: f64,
    /// Probability that a patient carries each noise code.
    pub noise_rate: f64,
    pub age_mean: f64,
    pub age_sd: f64,
    pub index_start: NaiveDate,
    pub index_span_days: u32,
    pub lookback_days: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_phenotypes: 2,
            control_cohorts: 1,
            patients_per_group: 200,
            n_signal_codes: 5,
            n_noise_codes: 40,
            signal_rate: 0.8,
            signal_ttd_mean_men: 200.0,
            signal_ttd_mean_women: 230.0,
            signal_ttd_sd: 20.0,
            noise_rate: 0.1,
            age_mean: 55.0,
            age_sd: 12.0,
            index_start: NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid date"),
            index_span_days: 2000,
            lookback_days: DEFAULT_LOOKBACK_DAYS,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_phenotypes < 1 {
            return bad("at least one phenotype is required".into());
        }
        if self.n_phenotypes + self.control_cohorts < 2 {
            return bad("at least 2 cohorts are needed so controls have a sibling cohort".into());
        }
        if self.patients_per_group < 1 {
            return bad("patients_per_group must be at least 1".into());
        }
        if self.lookback_days < 1 {
            return bad("lookback_days must be at least 1".into());
        }
        let horizon = f64::from(self.lookback_days);
        for (name, mean) in [
            ("signal_ttd_mean_men", self.signal_ttd_mean_men),
            ("signal_ttd_mean_women", self.signal_ttd_mean_women),
        ] {
            if !(0.0..=horizon).contains(&mean) {
                return bad(format!("{name} = {mean} outside [0, {horizon}]"));
            }
        }
        for (name, p) in [("signal_rate", self.signal_rate), ("noise_rate", self.noise_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if !(self.signal_ttd_sd >= 0.0) || !(self.age_sd >= 0.0) {
            return bad("standard deviations must be non-negative".into());
        }
        if !(f64::from(MIN_AGE)..=MAX_AGE).contains(&self.age_mean) {
            return bad(format!("age_mean {} outside [{MIN_AGE}, {MAX_AGE}]", self.age_mean));
        }
        Ok(())
    }

    pub fn phenotype_id(k: usize) -> String {
        format!("ph{:02}", k + 1)
    }

    pub fn control_id(k: usize) -> String {
        format!("ctl{:02}", k + 1)
    }

    /// Cohort ids in output order: phenotypes, then control cohorts.
    pub fn cohort_ids(&self) -> Vec<String> {
        (0..self.n_phenotypes)
            .map(Self::phenotype_id)
            .chain((0..self.control_cohorts).map(Self::control_id))
            .collect()
    }

    pub fn signal_code(k: usize, j: usize) -> String {
        format!("{}_S{:02}", Self::phenotype_id(k), j + 1)
    }

    pub fn noise_code(j: usize) -> String {
        format!("N{:03}", j + 1)
    }

    fn signal_mean(&self, g: Group) -> f64 {
        match g {
            Group::A => self.signal_ttd_mean_men,
            Group::B => self.signal_ttd_mean_women,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Signal,
    Noise,
}

/// Realized time-to-diagnosis statistics of one code within one phenotype cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeTruth {
    pub code: String,
    pub kind: CodeKind,
    pub nominal_mean_ttd_men: Option<f64>,
    pub nominal_mean_ttd_women: Option<f64>,
    pub n_men: usize,
    pub n_women: usize,
    pub mean_ttd_men: Option<f64>,
    pub mean_ttd_women: Option<f64>,
    /// `mean_ttd_women - mean_ttd_men` when both groups carry the code.
    pub diff_days: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeTruth {
    pub phenotype_id: String,
    pub n_men: usize,
    pub n_women: usize,
    /// Nominal women-minus-men signal timing; absent for control cohorts.
    pub injected_delta_days: Option<f64>,
    pub codes: Vec<CodeTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub phenotypes: Vec<PhenotypeTruth>,
}

impl SynthManifest {
    pub fn phenotype(&self, id: &str) -> Option<&PhenotypeTruth> {
        self.phenotypes.iter().find(|p| p.phenotype_id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub events_csv: Vec<u8>,
    /// `(phenotype id, cohort CSV)` in phenotype order.
    pub cohorts: Vec<(String, Vec<u8>)>,
    pub manifest: SynthManifest,
}

struct Patient {
    id: String,
    group: Group,
    age: u32,
    index_date: NaiveDate,
    /// code -> days before diagnosis
    events: BTreeMap<String, u32>,
}

fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if sd == 0.0 {
        return mean.clamp(lo, hi);
    }
    let normal = Normal::new(mean, sd).expect("validated sd");
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    mean.clamp(lo, hi)
}

fn generate_cohort(config: &SynthConfig, phenotype_id: &str, signal: Option<usize>) -> Vec<Patient> {
    let n_signal = if signal.is_some() { config.n_signal_codes } else { 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(named_seed(config.seed, phenotype_id));
    let horizon = f64::from(config.lookback_days);
    let mut patients = Vec::with_capacity(2 * config.patients_per_group);
    for group in Group::ALL {
        for idx in 0..config.patients_per_group {
            let age = truncated_normal(
                &mut rng,
                config.age_mean,
                config.age_sd,
                f64::from(MIN_AGE),
                MAX_AGE,
            )
            .round() as u32;
            let index_date = config.index_start
                + Duration::days(rng.random_range(0..=i64::from(config.index_span_days)));
            let mut events = BTreeMap::new();
            for j in 0..n_signal {
                if rng.random_bool(config.signal_rate) {
                    let ttd = truncated_normal(
                        &mut rng,
                        config.signal_mean(group),
                        config.signal_ttd_sd,
                        0.0,
                        horizon,
                    )
                    .round() as u32;
                    let k = signal.expect("signal codes only for phenotypes");
                    events.insert(SynthConfig::signal_code(k, j), ttd);
                }
            }
            for j in 0..config.n_noise_codes {
                if rng.random_bool(config.noise_rate) {
                    let ttd = rng.random_range(0..=config.lookback_days);
                    events.insert(SynthConfig::noise_code(j), ttd);
                }
            }
            patients.push(Patient {
                id: format!("{phenotype_id}-{}{:05}", group.code(), idx + 1),
                group,
                age,
                index_date,
                events,
            });
        }
    }
    patients
}

fn code_truth(config: &SynthConfig, patients: &[Patient], code: String, kind: CodeKind) -> CodeTruth {
    let mut n = [0usize; 2];
    let mut sum = [0u64; 2];
    for p in patients {
        if let Some(&ttd) = p.events.get(&code) {
            n[p.group.index()] += 1;
            sum[p.group.index()] += u64::from(ttd);
        }
    }
    let mean = |g: Group| (n[g.index()] > 0).then(|| sum[g.index()] as f64 / n[g.index()] as f64);
    let (men, women) = (mean(Group::A), mean(Group::B));
    let nominal = |g: Group| (kind == CodeKind::Signal).then(|| config.signal_mean(g));
    CodeTruth {
        code,
        kind,
        nominal_mean_ttd_men: nominal(Group::A),
        nominal_mean_ttd_women: nominal(Group::B),
        n_men: n[0],
        n_women: n[1],
        mean_ttd_men: men,
        mean_ttd_women: women,
        diff_days: men.zip(women).map(|(m, w)| w - m),
    }
}

/// Generates the events extract, one cohort file per phenotype and the
/// ground-truth manifest. Output bytes depend only on `config`.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let per_cohort: Vec<(String, Option<usize>, Vec<Patient>)> = config
        .cohort_ids()
        .into_iter()
        .enumerate()
        .map(|(k, id)| {
            let signal = (k < config.n_phenotypes).then_some(k);
            let patients = generate_cohort(config, &id, signal);
            (id, signal, patients)
        })
        .collect();

    let mut events = csv::Writer::from_writer(Vec::new());
    events.write_record(["patient_id", "condition_code", "occurred_on"])?;
    let mut cohorts = Vec::new();
    let mut truths = Vec::new();
    for (phenotype_id, signal, patients) in &per_cohort {
        let mut cohort = csv::Writer::from_writer(Vec::new());
        cohort.write_record(["patient_id", "group", "age_at_index", "index_date"])?;
        for p in patients {
            cohort.write_record([
                p.id.as_str(),
                p.group.code(),
                &p.age.to_string(),
                &p.index_date.format("%Y-%m-%d").to_string(),
            ])?;
            for (code, &ttd) in &p.events {
                let on = p.index_date - Duration::days(i64::from(ttd));
                events.write_record([p.id.as_str(), code, &on.format("%Y-%m-%d").to_string()])?;
            }
        }
        let cohort_bytes = cohort
            .into_inner()
            .map_err(|e| Error::Validation(format!("cohort buffer: {e}")))?;
        cohorts.push((phenotype_id.clone(), cohort_bytes));

        let mut codes: Vec<CodeTruth> = match signal {
            Some(k) => (0..config.n_signal_codes)
                .map(|j| code_truth(config, patients, SynthConfig::signal_code(*k, j), CodeKind::Signal))
                .collect(),
            None => Vec::new(),
        };
        codes.extend((0..config.n_noise_codes).map(|j| {
            code_truth(config, patients, SynthConfig::noise_code(j), CodeKind::Noise)
        }));
        truths.push(PhenotypeTruth {
            phenotype_id: phenotype_id.clone(),
            n_men: config.patients_per_group,
            n_women: config.patients_per_group,
            injected_delta_days: signal
                .map(|_| config.signal_ttd_mean_women - config.signal_ttd_mean_men),
            codes,
        });
    }
    let events_csv = events
        .into_inner()
        .map_err(|e| Error::Validation(format!("events buffer: {e}")))?;
    Ok(SynthOutput {
        events_csv,
        cohorts,
        manifest: SynthManifest {
            config: config.clone(),
            phenotypes: truths,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_cohort_file, parse_condition_events};

    fn small() -> SynthConfig {
        SynthConfig {
            patients_per_group: 20,
            n_noise_codes: 5,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.events_csv, c.events_csv);
    }

    #[test]
    fn output_parses() {
        let out = generate(&small()).unwrap();
        let events = parse_condition_events(out.events_csv.as_slice()).unwrap();
        assert!(!events.is_empty());
        for (_, bytes) in &out.cohorts {
            let members = parse_cohort_file(bytes.as_slice()).unwrap();
            assert_eq!(members.len(), 40);
            assert!(members.iter().all(|m| m.age_at_index >= MIN_AGE));
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        for cfg in [
            SynthConfig { signal_ttd_mean_men: 1200.0, ..small() },
            SynthConfig { n_phenotypes: 1, control_cohorts: 0, ..small() },
            SynthConfig { n_phenotypes: 0, control_cohorts: 3, ..small() },
            SynthConfig { noise_rate: 1.5, ..small() },
            SynthConfig { signal_ttd_sd: -1.0, ..small() },
            SynthConfig { age_mean: 5.0, ..small() },
        ] {
            assert!(matches!(generate(&cfg), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn manifest_records_signal_truth() {
        let out = generate(&small()).unwrap();
        let ph = out.manifest.phenotype("ph01").unwrap();
        assert_eq!(ph.injected_delta_days, Some(30.0));
        let s = &ph.codes[0];
        assert_eq!(s.code, "ph01_S01");
        assert_eq!(s.kind, CodeKind::Signal);
        assert_eq!(s.nominal_mean_ttd_men, Some(200.0));
        assert!(s.n_men > 0 && s.n_women > 0);
        // only ph01 cases carry ph01 signal codes
        let other = out.manifest.phenotype("ph02").unwrap();
        assert!(other.codes.iter().all(|c| !c.code.starts_with("ph01")));
        let ctl = out.manifest.phenotype("ctl01").unwrap();
        assert_eq!(ctl.injected_delta_days, None);
        assert!(ctl.codes.iter().all(|c| c.kind == CodeKind::Noise));
    }
}
