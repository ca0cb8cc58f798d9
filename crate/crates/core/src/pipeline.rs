//! End-to-end runs over files: `ttd` tables, fairness `audit` reports and the
//! plain-text `report`. Every JSON artifact embeds the resolved [`RunConfig`].
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! ingest_report.json
//! ttd/<phenotype>.csv           ttd/summary.json
//! audit/<phenotype>/report.json audit/<phenotype>/plot_data.csv
//! audit/<phenotype>/model.json  audit/msd_ranking.csv
//! audit/summary.json            report.md
//! ```
//!
//! Seeds: phenotype `p` uses `s = named_seed(seed, p)`; negative sampling,
//! the split and the bootstrap use `derive_seed(s, 0)`, `derive_seed(s, 1)`
//! and `derive_seed(s, 2)`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    sample_negatives, stratified_split, DiagnosisModel, LabeledCohort, TrainConfig,
    TrainingMeta, DEFAULT_LAMBDA, DEFAULT_MAX_ITER, DEFAULT_TEST_FRAC, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::fairness::{
    bootstrap_from_predictions, gap_trend, msd, BootstrapConfig, GapSeries, GroupConfusion,
    Metric, MsdResult, TrendFit, WindowPredictions, DEFAULT_ALPHA, DEFAULT_RESAMPLES,
};
use crate::features::{censored_matrices, make_window_spec, WindowSpec, DEFAULT_WINDOW_DAYS};
use crate::ingest::{
    build_cohorts, parse_cohort_file, parse_condition_events, CohortHistories, HistoryOptions,
    IngestReport, PatientHistory, DEFAULT_LOOKBACK_DAYS,
};
use crate::seeds::{derive_seed, named_seed};
use crate::synth::SynthOutput;
use crate::ttd::{
    condition_ttd_table, cross_phenotype_summary, disparity_summary, write_table_csv,
    ConditionTtdRow, CrossPhenotypeSummary, DisparitySummary, DEFAULT_MIN_SUPPORT,
};

pub const GAP_CONVENTION: &str = "men - women (positive favors men)";
pub const TTD_CONVENTION: &str = "mean_ttd_women - mean_ttd_men (positive: women diagnosed later)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub events: PathBuf,
    pub cohorts: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub window_days: u32,
    pub lookback_days: u32,
    pub include_index_day: bool,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub test_frac: f64,
    pub min_support: usize,
    pub ratio: usize,
    pub threshold: f64,
    pub n_resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    /// Phenotypes processed concurrently; 0 lets the thread pool decide.
    pub workers: usize,
    /// Also write the censored test matrices of every window.
    pub dump_matrices: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            events: PathBuf::new(),
            cohorts: Vec::new(),
            output_dir: PathBuf::from("out"),
            window_days: DEFAULT_WINDOW_DAYS,
            lookback_days: DEFAULT_LOOKBACK_DAYS,
            include_index_day: true,
            lambda: DEFAULT_LAMBDA,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            test_frac: DEFAULT_TEST_FRAC,
            min_support: DEFAULT_MIN_SUPPORT,
            ratio: 1,
            threshold: 0.5,
            n_resamples: DEFAULT_RESAMPLES,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            metrics: Metric::DEFAULT.to_vec(),
            workers: 0,
            dump_matrices: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.cohorts.is_empty() {
            return bad("at least one cohort file is required".into());
        }
        for path in std::iter::once(&self.events).chain(&self.cohorts) {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        if self.window_days < 1 || self.lookback_days < 1 {
            return bad("window_days and lookback_days must be at least 1".into());
        }
        if !(self.lambda > 0.0) || !(self.tol > 0.0) {
            return bad("lambda and tol must be positive".into());
        }
        if !(self.test_frac > 0.0 && self.test_frac < 1.0) {
            return bad(format!("test_frac {} outside (0, 1)", self.test_frac));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.min_support < 1 || self.ratio < 1 || self.n_resamples < 1 {
            return bad("min_support, ratio and n_resamples must be at least 1".into());
        }
        if self.metrics.is_empty() {
            return bad("at least one metric is required".into());
        }
        Ok(())
    }

    fn history_options(&self) -> HistoryOptions {
        HistoryOptions {
            lookback_days: self.lookback_days,
            include_index_day: self.include_index_day,
        }
    }

    fn window_spec(&self) -> Result<WindowSpec> {
        make_window_spec(self.lookback_days, self.window_days)
    }

    fn train_config(&self) -> TrainConfig<f64> {
        TrainConfig {
            lambda: self.lambda,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
    }
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `events.csv`, `cohorts/<phenotype>.csv` and `manifest.json`.
pub fn write_synth(output: &SynthOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = vec![dir.join("events.csv")];
    write_atomic(&written[0], &output.events_csv)?;
    for (id, bytes) in &output.cohorts {
        let path = dir.join("cohorts").join(format!("{id}.csv"));
        write_atomic(&path, bytes)?;
        written.push(path);
    }
    let manifest = dir.join("manifest.json");
    write_json(&manifest, &output.manifest)?;
    written.push(manifest);
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Cohorts sorted by phenotype id.
    pub cohorts: Vec<CohortHistories>,
    pub report: IngestReport,
}

fn phenotype_id(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::InvalidArgument(format!("cannot name phenotype from {}", path.display())))
}

/// Parses the events extract and every cohort file (phenotype id = file stem).
pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    config.validate()?;
    let events = parse_condition_events(read_file(&config.events)?.as_slice())
        .map_err(|e| with_path(e, &config.events))?;
    let mut named = BTreeMap::new();
    for path in &config.cohorts {
        let id = phenotype_id(path)?;
        let members = parse_cohort_file(read_file(path)?.as_slice()).map_err(|e| with_path(e, path))?;
        if members.is_empty() {
            return Err(Error::EmptyInput(format!("cohort file {} has no members", path.display())));
        }
        if named.insert(id.clone(), members).is_some() {
            return Err(Error::InvalidArgument(format!("phenotype `{id}` given twice")));
        }
    }
    let cohorts: Vec<(&str, &[_])> = named.iter().map(|(k, v)| (k.as_str(), v.as_slice())).collect();
    let (cohorts, report) = build_cohorts(&events, &cohorts, &config.history_options())?;
    Ok(Dataset { cohorts, report })
}

fn with_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    }
}

#[derive(Debug, Clone, Serialize)]
struct IngestFile<'a> {
    config: &'a RunConfig,
    report: &'a IngestReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhenotypeTtd {
    pub phenotype_id: String,
    pub n_rows: usize,
    pub summary: Option<DisparitySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TtdSummaryFile {
    pub convention: String,
    pub config: RunConfig,
    pub per_phenotype: Vec<PhenotypeTtd>,
    /// All qualifying conditions of all phenotypes summarized together.
    pub pooled: DisparitySummary,
    pub cross_phenotype: CrossPhenotypeSummary,
}

pub struct TtdOutcome {
    pub tables: Vec<(String, Vec<ConditionTtdRow>)>,
    pub summary: TtdSummaryFile,
}

/// Per-phenotype TTD tables and disparity summaries.
pub fn run_ttd(config: &RunConfig) -> Result<TtdOutcome> {
    let data = load_dataset(config)?;
    write_json(
        &config.output_dir.join("ingest_report.json"),
        &IngestFile {
            config,
            report: &data.report,
        },
    )?;
    let pool = config.pool()?;
    let tables: Vec<(String, Vec<ConditionTtdRow>)> = pool.install(|| {
        data.cohorts
            .par_iter()
            .map(|c| Ok((c.phenotype_id.clone(), condition_ttd_table(c, config.min_support)?)))
            .collect::<Result<_>>()
    })?;
    let mut per_phenotype = Vec::new();
    let mut summaries = Vec::new();
    for (id, rows) in &tables {
        let mut buf = Vec::new();
        write_table_csv(rows, &mut buf)?;
        if rows.is_empty() {
            // the csv writer emits no header for an empty table
            buf = b"condition_code,n_men,n_women,mean_ttd_men,mean_ttd_women,diff_days\n".to_vec();
        }
        write_atomic(&config.output_dir.join("ttd").join(format!("{id}.csv")), &buf)?;
        let summary = disparity_summary(rows).ok();
        if let Some(s) = &summary {
            summaries.push((id.clone(), s.clone()));
        } else {
            log::warn!("{id}: no condition reaches min_support {} in both groups", config.min_support);
        }
        per_phenotype.push(PhenotypeTtd {
            phenotype_id: id.clone(),
            n_rows: rows.len(),
            note: summary
                .is_none()
                .then(|| format!("no condition reaches min_support {} in both groups", config.min_support)),
            summary,
        });
    }
    if summaries.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no phenotype has a condition with min_support {} in both groups",
            config.min_support
        )));
    }
    let pooled_rows: Vec<ConditionTtdRow> = tables.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    let summary = TtdSummaryFile {
        convention: TTD_CONVENTION.into(),
        config: config.clone(),
        per_phenotype,
        pooled: disparity_summary(&pooled_rows)?,
        cross_phenotype: cross_phenotype_summary(&summaries)?,
    };
    write_json(&config.output_dir.join("ttd").join("summary.json"), &summary)?;
    Ok(TtdOutcome { tables, summary })
}

/// A value or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fallible<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl<T> From<Result<T>> for Fallible<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Self {
                value: Some(v),
                error: None,
            },
            Err(e) => Self {
                value: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window_index: u32,
    pub day_cutoff: u32,
    pub men: Option<f64>,
    pub women: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub gap_convention: String,
    pub series: Vec<Option<f64>>,
    pub per_window: Vec<WindowRow>,
    /// Point MSD with its bootstrap interval.
    pub msd: Fallible<MsdResult<f64>>,
    pub trend: Fallible<TrendFit<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortCounts {
    pub cases: usize,
    pub controls: usize,
    pub unmatched_cases: usize,
    pub train: usize,
    pub test: usize,
    pub test_men: usize,
    pub test_women: usize,
    pub vocabulary_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeReport {
    pub phenotype_id: String,
    pub config: RunConfig,
    pub window_spec: WindowSpec,
    pub counts: CohortCounts,
    pub training: TrainingMeta<f64>,
    pub metrics: Vec<MetricReport>,
    pub confusions: Vec<GroupConfusion>,
}

fn metric_report(
    preds: &WindowPredictions,
    confusions: &[GroupConfusion],
    metric: Metric,
    boot: &BootstrapConfig,
) -> MetricReport {
    let series = GapSeries::<f64>::from_confusions(metric, preds.spec, confusions);
    let per_window = preds
        .spec
        .windows()
        .zip(&series.rates)
        .zip(&series.values)
        .map(|((i, [men, women]), gap)| WindowRow {
            window_index: i,
            day_cutoff: preds.spec.cutoff(i),
            men: *men,
            women: *women,
            gap: *gap,
        })
        .collect();
    let msd_result = msd(&series).and_then(|_| bootstrap_from_predictions(preds, metric, boot));
    MetricReport {
        metric,
        gap_convention: GAP_CONVENTION.into(),
        series: series.values.clone(),
        per_window,
        msd: msd_result.into(),
        trend: gap_trend(&series).into(),
    }
}

fn control_pool(cohorts: &[CohortHistories], case_index: usize) -> Vec<PatientHistory> {
    let cases: HashSet<&str> = cohorts[case_index]
        .histories
        .iter()
        .map(|h| h.patient_id())
        .collect();
    let mut seen = HashSet::new();
    cohorts
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != case_index)
        .flat_map(|(_, c)| c.histories.iter())
        .filter(|h| !cases.contains(h.patient_id()) && seen.insert(h.patient_id().to_owned()))
        .cloned()
        .collect()
}

/// Artifacts of auditing one phenotype, kept in memory for callers.
pub struct PhenotypeAudit {
    pub report: PhenotypeReport,
    pub model: DiagnosisModel<f64>,
    pub test: LabeledCohort,
    pub predictions: WindowPredictions,
}

/// Matched controls, split, training on full histories, then the windowed evaluation.
pub fn audit_phenotype(
    cohorts: &[CohortHistories],
    case_index: usize,
    config: &RunConfig,
) -> Result<PhenotypeAudit> {
    let cases = &cohorts[case_index];
    let seed = named_seed(config.seed, &cases.phenotype_id);
    let pool = control_pool(cohorts, case_index);
    let sample = sample_negatives(cases, &pool, config.ratio, derive_seed(seed, 0))?;
    let labeled = LabeledCohort::new(cases, &sample.negatives)?;
    let split = stratified_split(&labeled, config.test_frac, derive_seed(seed, 1))?;
    let train = labeled.subset(&split.train_rows);
    let test = labeled.subset(&split.test_rows);
    let model = DiagnosisModel::fit(&train, &config.train_config())?;
    let spec = config.window_spec()?;
    let predictions = WindowPredictions::compute(&model, &test, &spec, config.threshold);
    let confusions = predictions.confusions();
    let boot = BootstrapConfig {
        n_resamples: config.n_resamples,
        alpha: config.alpha,
        seed: derive_seed(seed, 2),
    };
    let metrics = config
        .metrics
        .iter()
        .map(|&m| metric_report(&predictions, &confusions, m, &boot))
        .collect();
    let test_groups = test.groups();
    let report = PhenotypeReport {
        phenotype_id: cases.phenotype_id.clone(),
        config: config.clone(),
        window_spec: spec,
        counts: CohortCounts {
            cases: cases.len(),
            controls: sample.negatives.len(),
            unmatched_cases: sample.unmatched.len(),
            train: train.len(),
            test: test.len(),
            test_men: test_groups.iter().filter(|g| **g == crate::Group::A).count(),
            test_women: test_groups.iter().filter(|g| **g == crate::Group::B).count(),
            vocabulary_size: model.vocabulary.len(),
        },
        training: model.model.meta.clone(),
        metrics,
        confusions,
    };
    Ok(PhenotypeAudit {
        report,
        model,
        test,
        predictions,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn plot_csv(report: &PhenotypeReport) -> String {
    let mut out = String::from("window_index,day_cutoff");
    for m in &report.metrics {
        let n = m.metric.name();
        let _ = write!(out, ",{n}_men,{n}_women,{n}_gap");
    }
    out.push('\n');
    for (w, i) in report.window_spec.windows().enumerate() {
        let _ = write!(out, "{i},{}", report.window_spec.cutoff(i));
        for m in &report.metrics {
            let row = &m.per_window[w];
            let _ = write!(out, ",{},{},{}", fmt_opt(row.men), fmt_opt(row.women), fmt_opt(row.gap));
        }
        out.push('\n');
    }
    out
}

fn dump_matrices(audit: &PhenotypeAudit, dir: &Path) -> Result<()> {
    let mut cohort = audit.test.cohort.clone();
    cohort.vocabulary = audit.model.vocabulary.clone();
    for m in censored_matrices(&cohort, &audit.report.window_spec) {
        let i = m.window_index.unwrap_or(0);
        let mut triplets = Vec::new();
        let mut labels = Vec::new();
        m.dump(&mut triplets, &mut labels)?;
        write_atomic(&dir.join(format!("window_{i:03}.triplets")), &triplets)?;
        write_atomic(&dir.join(format!("window_{i:03}.json")), &labels)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub phenotype_id: String,
    pub metric: Metric,
    pub n_train: usize,
    pub n_test: usize,
    pub msd: Option<f64>,
    pub mean_gap: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_windows_used: Option<usize>,
    pub trend_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditSummaryFile {
    pub gap_convention: String,
    pub config: RunConfig,
    pub ranking: Vec<RankingRow>,
}

fn ranking_rows(reports: &[PhenotypeReport]) -> Vec<RankingRow> {
    let mut rows: Vec<RankingRow> = reports
        .iter()
        .flat_map(|r| {
            r.metrics.iter().map(move |m| {
                let msd = m.msd.value.as_ref();
                let ci = msd.and_then(|v| v.ci.as_ref());
                RankingRow {
                    phenotype_id: r.phenotype_id.clone(),
                    metric: m.metric,
                    n_train: r.counts.train,
                    n_test: r.counts.test,
                    msd: msd.map(|v| v.msd),
                    mean_gap: msd.map(|v| v.mean_gap),
                    ci_low: ci.map(|c| c.low),
                    ci_high: ci.map(|c| c.high),
                    n_windows_used: msd.map(|v| v.n_windows_used),
                    trend_slope: m.trend.value.as_ref().map(|t| t.slope),
                }
            })
        })
        .collect();
    // by metric, then most male-favoring first; undefined MSD last
    rows.sort_by(|a, b| {
        a.metric.cmp(&b.metric).then_with(|| {
            let key = |r: &RankingRow| r.msd.unwrap_or(f64::NEG_INFINITY);
            key(b)
                .total_cmp(&key(a))
                .then_with(|| a.phenotype_id.cmp(&b.phenotype_id))
        })
    });
    rows
}

/// Audits every phenotype; writes per-phenotype reports, plot data and models,
/// plus the cross-phenotype MSD ranking.
pub fn run_audit(config: &RunConfig) -> Result<Vec<PhenotypeReport>> {
    let data = load_dataset(config)?;
    write_json(
        &config.output_dir.join("ingest_report.json"),
        &IngestFile {
            config,
            report: &data.report,
        },
    )?;
    let audit_dir = config.output_dir.join("audit");
    let pool = config.pool()?;
    let reports: Vec<PhenotypeReport> = pool.install(|| {
        (0..data.cohorts.len())
            .into_par_iter()
            .map(|k| {
                let audit = audit_phenotype(&data.cohorts, k, config)?;
                let dir = audit_dir.join(&audit.report.phenotype_id);
                write_json(&dir.join("report.json"), &audit.report)?;
                write_atomic(&dir.join("plot_data.csv"), plot_csv(&audit.report).as_bytes())?;
                let mut model = audit.model.to_json()?;
                model.push('\n');
                write_atomic(&dir.join("model.json"), model.as_bytes())?;
                if config.dump_matrices {
                    dump_matrices(&audit, &dir.join("matrices"))?;
                }
                Ok(audit.report)
            })
            .collect::<Result<_>>()
    })?;
    let ranking = ranking_rows(&reports);
    let mut csv = csv::Writer::from_writer(Vec::new());
    for row in &ranking {
        csv.serialize(row)?;
    }
    let bytes = csv
        .into_inner()
        .map_err(|e| Error::Validation(format!("ranking buffer: {e}")))?;
    write_atomic(&audit_dir.join("msd_ranking.csv"), &bytes)?;
    write_json(
        &audit_dir.join("summary.json"),
        &AuditSummaryFile {
            gap_convention: GAP_CONVENTION.into(),
            config: config.clone(),
            ranking,
        },
    )?;
    Ok(reports)
}

fn fmt_num(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "n/a".into())
}

/// Renders `report.md` from whatever `ttd` and `audit` summaries exist in `output_dir`.
pub fn run_report(output_dir: &Path) -> Result<String> {
    let ttd_path = output_dir.join("ttd").join("summary.json");
    let audit_path = output_dir.join("audit").join("summary.json");
    if !ttd_path.is_file() && !audit_path.is_file() {
        return Err(Error::EmptyInput(format!(
            "no ttd or audit results under {}",
            output_dir.display()
        )));
    }
    let mut out = String::from("# Time-to-diagnosis fairness report\n");
    if ttd_path.is_file() {
        let ttd: TtdSummaryFile = serde_json::from_slice(&read_file(&ttd_path)?)?;
        let _ = writeln!(out, "\n## Time to diagnosis\n\nDifferences are {}.\n", ttd.convention);
        out.push_str("| phenotype | conditions | women later | mean diff (d) | mean abs diff (d) | abs diff >= 100 d |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for p in &ttd.per_phenotype {
            match &p.summary {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {:.1}% | {:.1} | {:.1} | {:.1}% |",
                        p.phenotype_id,
                        s.n_conditions,
                        100.0 * s.frac_women_later,
                        s.mean_diff_days,
                        s.mean_abs_diff_days,
                        100.0 * s.frac_over_100d
                    );
                }
                None => {
                    let _ = writeln!(out, "| {} | 0 | n/a | n/a | n/a | n/a |", p.phenotype_id);
                }
            }
        }
        let u = &ttd.cross_phenotype.unweighted;
        let w = &ttd.cross_phenotype.weighted_by_conditions;
        let _ = writeln!(
            out,
            "\nAveraged over {} phenotypes: women later for {:.1}% of conditions \
             (mean diff {:.1} d, {:.1}% with |diff| >= 100 d). \
             Pooled over all conditions: {:.1}% (mean diff {:.1} d, {:.1}%).",
            ttd.cross_phenotype.n_phenotypes,
            100.0 * u.frac_women_later,
            u.mean_diff_days,
            100.0 * u.frac_over_100d,
            100.0 * w.frac_women_later,
            w.mean_diff_days,
            100.0 * w.frac_over_100d
        );
    }
    if audit_path.is_file() {
        let audit: AuditSummaryFile = serde_json::from_slice(&read_file(&audit_path)?)?;
        let _ = writeln!(
            out,
            "\n## Mean squared discrimination\n\nGaps are {}. Rows are ranked by MSD within each metric.\n",
            audit.gap_convention
        );
        out.push_str("| metric | phenotype | train | test | MSD | 95% CI | trend slope |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        for r in &audit.ranking {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | [{}, {}] | {} |",
                r.metric,
                r.phenotype_id,
                r.n_train,
                r.n_test,
                fmt_num(r.msd, 5),
                fmt_num(r.ci_low, 5),
                fmt_num(r.ci_high, 5),
                r.trend_slope.map(|s| format!("{s:.3e}")).unwrap_or_else(|| "n/a".into())
            );
        }
        for metric in Metric::ALL {
            let rows: Vec<_> = audit.ranking.iter().filter(|r| r.metric == metric).collect();
            if rows.is_empty() {
                continue;
            }
            let men = rows.iter().filter(|r| r.msd.is_some_and(|m| m > 0.0)).count();
            let women = rows.iter().filter(|r| r.msd.is_some_and(|m| m < 0.0)).count();
            let _ = writeln!(
                out,
                "\n{metric}: {men} phenotype(s) favor men, {women} favor women, of {}.",
                rows.len()
            );
        }
    }
    write_atomic(&output_dir.join("report.md"), out.as_bytes())?;
    Ok(out)
}
