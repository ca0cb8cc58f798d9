mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use proptest::prelude::*;

use common::date;
use ttdfair::ingest::{build_histories, HistoryOptions};
use ttdfair::{CohortMember, ConditionEvent, Group};

const N_IDS: usize = 12;

fn members(n: usize) -> Vec<CohortMember> {
    (0..n)
        .map(|i| CohortMember {
            patient_id: format!("p{i}"),
            group: if i % 2 == 0 { Group::A } else { Group::B },
            age_at_index: 20 + i as u32,
            index_date: date("2019-03-01") + Duration::days(i as i64 * 17),
        })
        .collect()
}

// (patient, code, days before that patient's index date)
fn raw_events() -> impl Strategy<Value = Vec<(usize, u8, i64)>> {
    prop::collection::vec((0..N_IDS, 0u8..8, -40i64..1300), 0..80)
}

fn to_events(raw: &[(usize, u8, i64)]) -> Vec<ConditionEvent> {
    let all = members(N_IDS);
    raw.iter()
        .map(|&(p, c, before)| ConditionEvent {
            patient_id: format!("p{p}"),
            condition_code: format!("K{c}"),
            occurred_on: all[p].index_date - Duration::days(before),
        })
        .collect()
}

fn opts(lookback: u32) -> HistoryOptions {
    HistoryOptions {
        lookback_days: lookback,
        include_index_day: true,
    }
}

proptest! {
    #[test]
    fn offsets_stay_on_the_timeline(raw in raw_events(), n in 1usize..N_IDS, lookback in 1u32..1400) {
        let (cohort, _) = build_histories("x", &to_events(&raw), &members(n), &opts(lookback)).unwrap();
        for h in &cohort.histories {
            for &offset in h.observations.values() {
                prop_assert!(offset <= lookback);
            }
        }
    }

    #[test]
    fn first_occurrence_oracle(raw in raw_events(), n in 1usize..N_IDS, lookback in 1u32..1400) {
        let (cohort, report) = build_histories("x", &to_events(&raw), &members(n), &opts(lookback)).unwrap();
        let mut expect: BTreeMap<(usize, u8), i64> = BTreeMap::new();
        for &(p, c, before) in &raw {
            if p < n && (0..=i64::from(lookback)).contains(&before) {
                let e = expect.entry((p, c)).or_insert(before);
                *e = (*e).max(before);
            }
        }
        prop_assert_eq!(cohort.len(), n);
        for (p, h) in cohort.histories.iter().enumerate() {
            let mine: BTreeMap<String, u32> = expect
                .iter()
                .filter(|((q, _), _)| *q == p)
                .map(|((_, c), &before)| (format!("K{c}"), lookback - before as u32))
                .collect();
            prop_assert_eq!(&h.observations, &mine);
        }
        let orphans = raw.iter().filter(|e| e.0 >= n).count();
        prop_assert_eq!(report.events_skipped_non_cohort, orphans);
    }

    #[test]
    fn duplicated_events_change_nothing(raw in raw_events(), n in 1usize..N_IDS) {
        let events = to_events(&raw);
        let doubled: Vec<ConditionEvent> = events.iter().chain(&events).cloned().collect();
        let once = build_histories("x", &events, &members(n), &opts(1095)).unwrap().0;
        let twice = build_histories("x", &doubled, &members(n), &opts(1095)).unwrap().0;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn event_order_is_irrelevant(
        (raw, shuffled) in raw_events().prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle())),
        n in 1usize..N_IDS,
    ) {
        let a = build_histories("x", &to_events(&raw), &members(n), &opts(1095)).unwrap().0;
        let b = build_histories("x", &to_events(&shuffled), &members(n), &opts(1095)).unwrap().0;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn vocabulary_is_sorted_and_exact(raw in raw_events(), n in 1usize..N_IDS) {
        let events = to_events(&raw);
        let (a, _) = build_histories("x", &events, &members(n), &opts(1095)).unwrap();
        let (b, _) = build_histories("x", &events, &members(n), &opts(1095)).unwrap();
        prop_assert_eq!(&a.vocabulary, &b.vocabulary);
        let seen: BTreeSet<&str> = a
            .histories
            .iter()
            .flat_map(|h| h.observations.keys().map(String::as_str))
            .collect();
        let codes: Vec<&str> = a.vocabulary.codes().iter().map(String::as_str).collect();
        prop_assert_eq!(codes, seen.into_iter().collect::<Vec<_>>());
        for (i, code) in a.vocabulary.codes().iter().enumerate() {
            prop_assert_eq!(a.vocabulary.column(code), Some(i as u32));
        }
    }
}

#[test]
fn index_day_flag() {
    let m = members(1);
    let events = vec![ConditionEvent {
        patient_id: "p0".into(),
        condition_code: "K1".into(),
        occurred_on: m[0].index_date,
    }];
    let kept = build_histories("x", &events, &m, &opts(1095)).unwrap().0;
    assert_eq!(kept.histories[0].observations["K1"], 1095);
    let without = HistoryOptions {
        include_index_day: false,
        ..opts(1095)
    };
    let dropped = build_histories("x", &events, &m, &without).unwrap().0;
    assert!(dropped.histories[0].observations.is_empty());
    assert!(dropped.vocabulary.is_empty());
}
