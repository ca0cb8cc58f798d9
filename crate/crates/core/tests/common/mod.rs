#![allow(dead_code)]

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttdfair::classifier::LabeledCohort;
use ttdfair::ingest::{build_cohorts, parse_cohort_file, parse_condition_events, HistoryOptions, IngestReport};
use ttdfair::synth::{generate, SynthConfig, SynthOutput};
use ttdfair::{CohortHistories, CohortMember, Group, PatientHistory, Vocabulary};

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

/// Random aligned histories: up to `n_codes` codes, offsets anywhere in [0, lookback].
pub fn random_histories(rng: &mut ChaCha8Rng, n: usize, n_codes: usize, lookback: u32) -> Vec<PatientHistory> {
    (0..n)
        .map(|i| {
            let member = CohortMember {
                patient_id: format!("p{i:04}"),
                group: if rng.random_bool(0.5) { Group::A } else { Group::B },
                age_at_index: rng.random_range(13..90),
                index_date: date("2020-06-01"),
            };
            let mut h = PatientHistory::new(member);
            let density = rng.random_range(0.05..0.6);
            for c in 0..n_codes {
                if rng.random_bool(density) {
                    h.observe(&format!("C{c:03}"), rng.random_range(0..=lookback));
                }
            }
            h
        })
        .collect()
}

pub fn random_cohort(rng: &mut ChaCha8Rng, n: usize, n_codes: usize, lookback: u32) -> CohortHistories {
    CohortHistories::from_histories("rand", lookback, random_histories(rng, n, n_codes, lookback))
}

/// A labeled cohort with at least two members in every group-by-label stratum.
pub fn random_labeled(rng: &mut ChaCha8Rng, n: usize, n_codes: usize, lookback: u32) -> LabeledCohort {
    loop {
        let all = random_histories(rng, n, n_codes, lookback);
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let mut counts = [[0usize; 2]; 2];
        for (h, &y) in all.iter().zip(&labels) {
            counts[h.group().index()][usize::from(y)] += 1;
        }
        if counts.iter().flatten().any(|&c| c < 2) {
            continue;
        }
        let pos: Vec<PatientHistory> = all.iter().zip(&labels).filter(|p| *p.1).map(|p| p.0.clone()).collect();
        let neg: Vec<PatientHistory> = all.iter().zip(&labels).filter(|p| !*p.1).map(|p| p.0.clone()).collect();
        let cases = CohortHistories::from_histories("rand", lookback, pos);
        return LabeledCohort::new(&cases, &neg).unwrap();
    }
}

/// Dense double loop: entry (p, s) is set iff code s was seen at or before `cutoff`.
pub fn dense_censored(rows: &[PatientHistory], vocab: &Vocabulary, cutoff: u32) -> Vec<Vec<bool>> {
    rows.iter()
        .map(|h| {
            (0..vocab.len())
                .map(|s| match h.observations.get(vocab.code(s)) {
                    Some(&offset) => offset <= cutoff,
                    None => false,
                })
                .collect()
        })
        .collect()
}

/// Dense scoring with the same accumulation order as the sparse kernel.
pub fn dense_predict(dense: &[Vec<bool>], weights: &[f64], intercept: f64, threshold: f64) -> Vec<bool> {
    dense
        .iter()
        .map(|row| {
            let mut z = intercept;
            for (j, &x) in row.iter().enumerate() {
                if x {
                    z += weights[j];
                }
            }
            1.0 / (1.0 + (-z).exp()) >= threshold
        })
        .collect()
}

pub fn synth(config: &SynthConfig) -> SynthOutput {
    generate(config).unwrap()
}

/// Parses a generated dataset back through ingestion, cohorts in output order.
pub fn ingest_synth(out: &SynthOutput, lookback: u32) -> (Vec<CohortHistories>, IngestReport) {
    let events = parse_condition_events(out.events_csv.as_slice()).unwrap();
    let members: Vec<(String, Vec<CohortMember>)> = out
        .cohorts
        .iter()
        .map(|(id, bytes)| (id.clone(), parse_cohort_file(bytes.as_slice()).unwrap()))
        .collect();
    let named: Vec<(&str, &[CohortMember])> = members.iter().map(|(id, m)| (id.as_str(), m.as_slice())).collect();
    let opts = HistoryOptions {
        lookback_days: lookback,
        include_index_day: true,
    };
    build_cohorts(&events, &named, &opts).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b| <= tol * max(|a|, |b|)`, treating two exact zeros as equal.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Random design (`n` rows, `c` columns), labels and parameters for gradient checks.
pub struct Instance {
    pub x: ttdfair::sparse::BinaryCsr,
    pub y: Vec<bool>,
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_c: usize) -> Instance {
    let n = rng.random_range(2..=max_n);
    let c = rng.random_range(1..=max_c);
    let density = rng.random_range(0.1..0.7);
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| (0..c as u32).filter(|_| rng.random_bool(density)).collect())
        .collect();
    Instance {
        x: ttdfair::sparse::BinaryCsr::from_rows(c, rows).unwrap(),
        y: (0..n).map(|_| rng.random_bool(0.5)).collect(),
        w: (0..c).map(|_| rng.random_range(-2.0..2.0)).collect(),
        b: rng.random_range(-1.0..1.0),
        lambda: 10f64.powf(rng.random_range(-2.0..1.5)),
    }
}

/// Max-norm relative error between the analytic gradient and central
/// differences with step `h`: `|g - g_fd|_inf / max(|g|_inf, |g_fd|_inf)`.
pub fn gradient_rel_error(inst: &Instance, h: f64) -> f64 {
    use ttdfair::classifier::loss_and_gradient;
    let f = |w: &[f64], b: f64| loss_and_gradient(w, b, &inst.x, &inst.y, inst.lambda).unwrap().objective;
    let g = loss_and_gradient(&inst.w, inst.b, &inst.x, &inst.y, inst.lambda).unwrap();
    let mut analytic = g.weights.clone();
    analytic.push(g.intercept);
    let mut numeric = Vec::with_capacity(analytic.len());
    for j in 0..inst.w.len() {
        let mut plus = inst.w.clone();
        let mut minus = inst.w.clone();
        plus[j] += h;
        minus[j] -= h;
        numeric.push((f(&plus, inst.b) - f(&minus, inst.b)) / (2.0 * h));
    }
    numeric.push((f(&inst.w, inst.b + h) - f(&inst.w, inst.b - h)) / (2.0 * h));
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let scale = inf(&analytic).max(inf(&numeric));
    if scale == 0.0 {
        0.0
    } else {
        inf(&diff) / scale
    }
}
