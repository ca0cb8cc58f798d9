//! Condition-event and cohort ingestion, and alignment of events onto the
//! per-patient day-offset timeline that ends at the index (diagnosis) date.
//!
//! Offsets run from 0 (`lookback_days` before diagnosis) to `lookback_days`
//! (the diagnosis day itself). A condition's time to diagnosis is
//! `lookback_days - offset`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LOOKBACK_DAYS: u32 = 1095;
pub const MIN_AGE: u32 = 13;

const EVENT_HEADER: [&str; 3] = ["patient_id", "condition_code", "occurred_on"];
const COHORT_HEADER: [&str; 4] = ["patient_id", "group", "age_at_index", "index_date"];

/// Binary group attribute. `A` is men (`M` in cohort files), `B` is women (`F`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "M")]
    A,
    #[serde(rename = "F")]
    B,
}

impl Group {
    pub const ALL: [Group; 2] = [Group::A, Group::B];

    pub fn from_code(code: &str) -> Option<Group> {
        match code {
            "M" => Some(Group::A),
            "F" => Some(Group::B),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Group::A => "M",
            Group::B => "F",
        }
    }

    /// Plural label used in report headers.
    pub fn label(self) -> &'static str {
        match self {
            Group::A => "men",
            Group::B => "women",
        }
    }

    pub fn swapped(self) -> Group {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionEvent {
    pub patient_id: String,
    pub condition_code: String,
    pub occurred_on: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortMember {
    pub patient_id: String,
    pub group: Group,
    pub age_at_index: u32,
    pub index_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientHistory {
    pub member: CohortMember,
    /// Condition code to first-occurrence day offset.
    pub observations: BTreeMap<String, u32>,
}

impl PatientHistory {
    pub fn new(member: CohortMember) -> Self {
        Self {
            member,
            observations: BTreeMap::new(),
        }
    }

    pub fn patient_id(&self) -> &str {
        &self.member.patient_id
    }

    pub fn group(&self) -> Group {
        self.member.group
    }

    /// Records an observation, keeping the earliest offset per code.
    pub fn observe(&mut self, code: &str, offset: u32) -> bool {
        match self.observations.get_mut(code) {
            Some(existing) => {
                if offset < *existing {
                    *existing = offset;
                }
                false
            }
            None => {
                self.observations.insert(code.to_owned(), offset);
                true
            }
        }
    }
}

/// Ordered condition-code vocabulary; a code's position is its column id.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    codes: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary in lexicographic order, deduplicating codes.
    pub fn from_codes<I, S>(codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = codes.into_iter().map(Into::into).collect();
        let codes: Vec<String> = sorted.into_iter().collect();
        let index = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as u32))
            .collect();
        Self { codes, index }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn column(&self, code: &str) -> Option<u32> {
        self.index.get(code).copied()
    }

    pub fn code(&self, column: usize) -> &str {
        &self.codes[column]
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.codes == other.codes
    }
}

impl Eq for Vocabulary {}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.codes.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let codes = Vec::<String>::deserialize(d)?;
        Ok(Vocabulary::from_codes(codes))
    }
}

/// All aligned histories of one phenotype cohort plus its column vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CohortHistories {
    pub phenotype_id: String,
    pub lookback_days: u32,
    pub histories: Vec<PatientHistory>,
    pub vocabulary: Vocabulary,
}

impl CohortHistories {
    /// Wraps histories, deriving the vocabulary from the codes they contain.
    pub fn from_histories(
        phenotype_id: impl Into<String>,
        lookback_days: u32,
        histories: Vec<PatientHistory>,
    ) -> Self {
        let vocabulary = Vocabulary::from_codes(
            histories
                .iter()
                .flat_map(|h| h.observations.keys().map(String::as_str)),
        );
        Self {
            phenotype_id: phenotype_id.into(),
            lookback_days,
            histories,
            vocabulary,
        }
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn groups(&self) -> Vec<Group> {
        self.histories.iter().map(PatientHistory::group).collect()
    }

    /// Histories at `rows`, in that order, with a vocabulary recomputed for the subset.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let histories = rows.iter().map(|&r| self.histories[r].clone()).collect();
        Self::from_histories(self.phenotype_id.clone(), self.lookback_days, histories)
    }

    /// The same cohort with group labels exchanged.
    pub fn with_swapped_groups(&self) -> Self {
        let mut out = self.clone();
        for h in &mut out.histories {
            h.member.group = h.member.group.swapped();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryOptions {
    pub lookback_days: u32,
    /// Whether conditions first recorded on the diagnosis day itself are kept.
    pub include_index_day: bool,
}

impl Default for HistoryOptions {
    fn default() -> Self {
        Self {
            lookback_days: DEFAULT_LOOKBACK_DAYS,
            include_index_day: true,
        }
    }
}

/// Per-cohort alignment counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortStats {
    pub phenotype_id: String,
    pub n_members: usize,
    pub n_men: usize,
    pub n_women: usize,
    pub members_without_events: usize,
    pub events_matched: usize,
    pub events_kept: usize,
    pub events_outside_window: usize,
    pub duplicate_codes_collapsed: usize,
    pub vocabulary_size: usize,
}

/// Validation report emitted after ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub n_events: usize,
    /// Events whose patient is in none of the cohorts; a warning, not an error.
    pub events_skipped_non_cohort: usize,
    pub cohorts: Vec<CohortStats>,
}

impl IngestReport {
    pub fn warning_count(&self) -> usize {
        self.events_skipped_non_cohort
    }
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| parse_error(1, e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse_error(
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn records<R: Read>(
    reader: &mut csv::Reader<R>,
    width: usize,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + '_ {
    reader.records().map(move |rec| {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(parse_error(
                line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        Ok((line, rec))
    })
}

fn required<'a>(rec: &'a csv::StringRecord, col: usize, name: &str, line: u64) -> Result<&'a str> {
    match rec.get(col) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(parse_error(line, format!("missing field `{name}`"))),
    }
}

fn parse_date(raw: &str, name: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map_err(|e| parse_error(line, format!("invalid {name} `{raw}`: {e}")))
}

/// Parses `patient_id,condition_code,occurred_on` rows, preserving row order.
pub fn parse_condition_events<R: Read>(input: R) -> Result<Vec<ConditionEvent>> {
    let mut reader = csv_reader(input);
    check_header(&mut reader, &EVENT_HEADER)?;
    let mut out = Vec::new();
    for rec in records(&mut reader, EVENT_HEADER.len()) {
        let (line, rec) = rec?;
        let patient_id = required(&rec, 0, "patient_id", line)?;
        let condition_code = required(&rec, 1, "condition_code", line)?;
        let occurred_on = parse_date(required(&rec, 2, "occurred_on", line)?, "occurred_on", line)?;
        out.push(ConditionEvent {
            patient_id: patient_id.to_owned(),
            condition_code: condition_code.to_owned(),
            occurred_on,
        });
    }
    Ok(out)
}

/// Parses `patient_id,group,age_at_index,index_date` rows and validates the cohort.
pub fn parse_cohort_file<R: Read>(input: R) -> Result<Vec<CohortMember>> {
    let mut reader = csv_reader(input);
    check_header(&mut reader, &COHORT_HEADER)?;
    let mut out = Vec::new();
    for rec in records(&mut reader, COHORT_HEADER.len()) {
        let (line, rec) = rec?;
        let patient_id = required(&rec, 0, "patient_id", line)?;
        let group_raw = required(&rec, 1, "group", line)?;
        let group = Group::from_code(group_raw).ok_or_else(|| {
            parse_error(line, format!("unknown group code `{group_raw}` (expected M or F)"))
        })?;
        let age_raw = required(&rec, 2, "age_at_index", line)?;
        let age_at_index: u32 = age_raw
            .parse()
            .map_err(|_| parse_error(line, format!("invalid age_at_index `{age_raw}`")))?;
        if age_at_index < MIN_AGE {
            return Err(Error::Validation(format!(
                "line {line}: patient {patient_id} has age_at_index {age_at_index}; \
                 cohort members must be at least {MIN_AGE} years old"
            )));
        }
        let index_date = parse_date(required(&rec, 3, "index_date", line)?, "index_date", line)?;
        out.push(CohortMember {
            patient_id: patient_id.to_owned(),
            group,
            age_at_index,
            index_date,
        });
    }
    validate_members(&out)?;
    Ok(out)
}

/// Checks the age floor and patient-id uniqueness.
pub fn validate_members(members: &[CohortMember]) -> Result<()> {
    if let Some(m) = members.iter().find(|m| m.age_at_index < MIN_AGE) {
        return Err(Error::Validation(format!(
            "patient {} has age_at_index {}; cohort members must be at least {MIN_AGE} years old",
            m.patient_id, m.age_at_index
        )));
    }
    let mut seen = HashSet::new();
    let mut dups = BTreeSet::new();
    for m in members {
        if m.patient_id.is_empty() {
            return Err(Error::Validation("empty patient_id in cohort".into()));
        }
        if !seen.insert(m.patient_id.as_str()) {
            dups.insert(m.patient_id.as_str());
        }
    }
    if !dups.is_empty() {
        return Err(Error::Validation(format!(
            "duplicate patient_id in cohort: {}",
            dups.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(())
}

fn events_by_patient(events: &[ConditionEvent]) -> HashMap<&str, Vec<&ConditionEvent>> {
    let mut map: HashMap<&str, Vec<&ConditionEvent>> = HashMap::new();
    for e in events {
        map.entry(e.patient_id.as_str()).or_default().push(e);
    }
    map
}

fn align_cohort(
    phenotype_id: &str,
    members: &[CohortMember],
    by_patient: &HashMap<&str, Vec<&ConditionEvent>>,
    opts: &HistoryOptions,
) -> (CohortHistories, CohortStats) {
    let mut stats = CohortStats {
        phenotype_id: phenotype_id.to_owned(),
        n_members: members.len(),
        ..Default::default()
    };
    let lookback = i64::from(opts.lookback_days);
    let min_gap = if opts.include_index_day { 0 } else { 1 };
    let mut histories = Vec::with_capacity(members.len());
    for member in members {
        match member.group {
            Group::A => stats.n_men += 1,
            Group::B => stats.n_women += 1,
        }
        let mut history = PatientHistory::new(member.clone());
        for event in by_patient.get(member.patient_id.as_str()).into_iter().flatten() {
            stats.events_matched += 1;
            let days_before = (member.index_date - event.occurred_on).num_days();
            if days_before < min_gap || days_before > lookback {
                stats.events_outside_window += 1;
                continue;
            }
            stats.events_kept += 1;
            let offset = (lookback - days_before) as u32;
            if !history.observe(&event.condition_code, offset) {
                stats.duplicate_codes_collapsed += 1;
            }
        }
        if history.observations.is_empty() {
            stats.members_without_events += 1;
        }
        histories.push(history);
    }
    let cohort = CohortHistories::from_histories(phenotype_id, opts.lookback_days, histories);
    stats.vocabulary_size = cohort.vocabulary.len();
    (cohort, stats)
}

fn check_options(opts: &HistoryOptions) -> Result<()> {
    if opts.lookback_days < 1 {
        return Err(Error::InvalidArgument("lookback_days must be at least 1".into()));
    }
    Ok(())
}

/// Aligns events onto one cohort's timeline.
///
/// Events of patients outside `members` are skipped and tallied in the
/// report's `events_skipped_non_cohort`.
pub fn build_histories(
    phenotype_id: &str,
    events: &[ConditionEvent],
    members: &[CohortMember],
    opts: &HistoryOptions,
) -> Result<(CohortHistories, IngestReport)> {
    let (mut cohorts, report) = build_cohorts(events, &[(phenotype_id, members)], opts)?;
    Ok((cohorts.pop().expect("one cohort in, one out"), report))
}

/// Aligns one shared event extract onto several phenotype cohorts.
///
/// An event is only counted as skipped when its patient belongs to none of
/// the cohorts; patients in several cohorts are aligned once per cohort.
pub fn build_cohorts<S: AsRef<str>>(
    events: &[ConditionEvent],
    cohorts: &[(S, &[CohortMember])],
    opts: &HistoryOptions,
) -> Result<(Vec<CohortHistories>, IngestReport)> {
    check_options(opts)?;
    let by_patient = events_by_patient(events);
    let mut known: HashSet<&str> = HashSet::new();
    let mut out = Vec::with_capacity(cohorts.len());
    let mut report = IngestReport {
        n_events: events.len(),
        ..Default::default()
    };
    for (phenotype_id, members) in cohorts {
        validate_members(members)?;
        known.extend(members.iter().map(|m| m.patient_id.as_str()));
        let (cohort, stats) = align_cohort(phenotype_id.as_ref(), members, &by_patient, opts);
        out.push(cohort);
        report.cohorts.push(stats);
    }
    report.events_skipped_non_cohort = events
        .iter()
        .filter(|e| !known.contains(e.patient_id.as_str()))
        .count();
    if report.events_skipped_non_cohort > 0 {
        log::warn!(
            "{} events reference patients outside every cohort and were skipped",
            report.events_skipped_non_cohort
        );
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn member(id: &str, group: Group, age: u32, index: &str) -> CohortMember {
        CohortMember {
            patient_id: id.into(),
            group,
            age_at_index: age,
            index_date: date(index),
        }
    }

    fn event(id: &str, code: &str, on: &str) -> ConditionEvent {
        ConditionEvent {
            patient_id: id.into(),
            condition_code: code.into(),
            occurred_on: date(on),
        }
    }

    #[test]
    fn parses_event_rows_in_order() {
        let csv = "patient_id,condition_code,occurred_on\np1,C42,2015-03-01\np0,C1,2014-01-02\n";
        let events = parse_condition_events(csv.as_bytes()).unwrap();
        assert_eq!(events, vec![event("p1", "C42", "2015-03-01"), event("p0", "C1", "2014-01-02")]);
    }

    #[test]
    fn header_only_event_file_is_empty() {
        let events = parse_condition_events("patient_id,condition_code,occurred_on\n".as_bytes());
        assert!(events.unwrap().is_empty());
    }

    #[test]
    fn bad_date_reports_line_two() {
        let csv = "patient_id,condition_code,occurred_on\np1,C42,not-a-date\n";
        match parse_condition_events(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_reports_line() {
        let csv = "patient_id,condition_code,occurred_on\np1,C1,2015-01-01\np2,,2015-01-01\n";
        match parse_condition_events(csv.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("condition_code"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let short = "patient_id,condition_code,occurred_on\np1,C1\n";
        assert!(matches!(
            parse_condition_events(short.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let csv = "patient,code,date\np1,C1,2015-01-01\n";
        assert!(matches!(
            parse_condition_events(csv.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn parses_cohort_member() {
        let csv = "patient_id,group,age_at_index,index_date\np1,F,55,2018-06-01\n";
        let members = parse_cohort_file(csv.as_bytes()).unwrap();
        assert_eq!(members, vec![member("p1", Group::B, 55, "2018-06-01")]);
    }

    #[test]
    fn duplicate_member_lists_id() {
        let csv = "patient_id,group,age_at_index,index_date\n\
                   p1,F,55,2018-06-01\np1,F,55,2018-06-01\n";
        match parse_cohort_file(csv.as_bytes()) {
            Err(Error::Validation(msg)) => assert!(msg.contains("p1")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn under_age_member_is_rejected() {
        let csv = "patient_id,group,age_at_index,index_date\np2,M,12,2018-01-01\n";
        match parse_cohort_file(csv.as_bytes()) {
            Err(Error::Validation(msg)) => assert!(msg.contains("at least 13")),
            other => panic!("expected validation error, got {other:?}"),
        }
        let ok = "patient_id,group,age_at_index,index_date\np2,M,13,2018-01-01\n";
        assert_eq!(parse_cohort_file(ok.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn unknown_group_is_rejected() {
        let csv = "patient_id,group,age_at_index,index_date\np2,X,40,2018-01-01\n";
        assert!(matches!(
            parse_cohort_file(csv.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn aligns_offsets_and_keeps_first_occurrence() {
        let members = vec![member("p1", Group::A, 40, "2018-01-01")];
        let index = date("2018-01-01");
        let back = |d: i64| (index - chrono::Duration::days(d)).format("%Y-%m-%d").to_string();
        let events = vec![
            event("p1", "X", &back(100)),
            event("p1", "Y", &back(50)),
            event("p1", "Y", &back(200)),
            event("p1", "Z", &back(1200)),
            event("p1", "D", &back(0)),
            event("p9", "X", &back(10)),
        ];
        let (cohort, report) =
            build_histories("ph", &events, &members, &HistoryOptions::default()).unwrap();
        let obs = &cohort.histories[0].observations;
        assert_eq!(obs["X"], 995);
        assert_eq!(obs["Y"], 895);
        assert_eq!(obs["D"], 1095);
        assert!(!obs.contains_key("Z"));
        assert_eq!(cohort.vocabulary.codes(), ["D", "X", "Y"]);
        assert_eq!(report.events_skipped_non_cohort, 1);
        let stats = &report.cohorts[0];
        assert_eq!(stats.events_outside_window, 1);
        assert_eq!(stats.duplicate_codes_collapsed, 1);
        assert_eq!(stats.events_kept, 4);

        let opts = HistoryOptions {
            include_index_day: false,
            ..Default::default()
        };
        let (cohort, _) = build_histories("ph", &events, &members, &opts).unwrap();
        assert!(!cohort.histories[0].observations.contains_key("D"));
    }

    #[test]
    fn members_without_events_are_retained() {
        let members = vec![
            member("p1", Group::A, 40, "2018-01-01"),
            member("p2", Group::B, 41, "2018-01-01"),
        ];
        let events = vec![event("p1", "X", "2017-12-01")];
        let (cohort, report) =
            build_histories("ph", &events, &members, &HistoryOptions::default()).unwrap();
        assert_eq!(cohort.len(), 2);
        assert!(cohort.histories[1].observations.is_empty());
        assert_eq!(report.cohorts[0].members_without_events, 1);
    }

    #[test]
    fn events_after_index_are_outside_window() {
        let members = vec![member("p1", Group::A, 40, "2018-01-01")];
        let events = vec![event("p1", "X", "2018-01-02")];
        let (cohort, _) =
            build_histories("ph", &events, &members, &HistoryOptions::default()).unwrap();
        assert!(cohort.histories[0].observations.is_empty());
    }

    #[test]
    fn zero_lookback_is_rejected() {
        let opts = HistoryOptions {
            lookback_days: 0,
            include_index_day: true,
        };
        assert!(matches!(
            build_histories("ph", &[], &[], &opts),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn shared_extract_counts_only_orphans() {
        let a = vec![member("p1", Group::A, 40, "2018-01-01")];
        let b = vec![member("p2", Group::B, 40, "2018-01-01")];
        let events = vec![
            event("p1", "X", "2017-12-01"),
            event("p2", "Y", "2017-12-01"),
            event("p3", "Y", "2017-12-01"),
        ];
        let (cohorts, report) = build_cohorts(
            &events,
            &[("a", a.as_slice()), ("b", b.as_slice())],
            &HistoryOptions::default(),
        )
        .unwrap();
        assert_eq!(report.events_skipped_non_cohort, 1);
        assert_eq!(cohorts[0].vocabulary.codes(), ["X"]);
        assert_eq!(cohorts[1].vocabulary.codes(), ["Y"]);
    }
}
