mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ttdfair::fairness::Metric;
use ttdfair::pipeline::{self, RunConfig};
use ttdfair::synth::{self, SynthConfig};
use ttdfair::{Error, ErrorKind, Result};

use crate::config::FileConfig;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Time-to-diagnosis disparity and time-variant fairness audits.
///
/// Log verbosity is read from TTDFAIR_LOG (error, warn, info, debug, trace).
#[derive(Debug, Parser)]
#[command(name = "ttdfair", version)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic events extract, cohort files and ground-truth manifest.
    Synth(SynthArgs),
    /// Per-condition mean time to diagnosis by group and disparity summaries.
    Ttd(RunArgs),
    /// Train per-phenotype classifiers and audit fairness over censoring windows.
    Audit(RunArgs),
    /// Render report.md from existing ttd/audit outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    phenotypes: Option<usize>,
    /// Sibling cohorts that carry noise codes only.
    #[arg(long)]
    control_cohorts: Option<usize>,
    /// Members per cohort and group.
    #[arg(long)]
    patients_per_group: Option<usize>,
    #[arg(long)]
    signal_codes: Option<usize>,
    #[arg(long)]
    noise_codes: Option<usize>,
    #[arg(long)]
    signal_rate: Option<f64>,
    /// Mean days from a signal code to diagnosis for men.
    #[arg(long)]
    ttd_men: Option<f64>,
    /// Mean days from a signal code to diagnosis for women.
    #[arg(long)]
    ttd_women: Option<f64>,
    #[arg(long)]
    ttd_sd: Option<f64>,
    #[arg(long)]
    noise_rate: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Condition events CSV (patient_id,condition_code,occurred_on).
    #[arg(long)]
    events: Option<PathBuf>,
    /// Cohort CSV, one per phenotype; the file stem names the phenotype.
    #[arg(long = "cohort")]
    cohorts: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Censoring window size in days.
    #[arg(long)]
    window_days: Option<u32>,
    #[arg(long)]
    lookback_days: Option<u32>,
    /// Drop conditions first recorded on the diagnosis day.
    #[arg(long)]
    exclude_index_day: bool,
    /// L2 penalty strength.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    test_frac: Option<f64>,
    /// Minimum patients per group for a condition to enter the TTD table.
    #[arg(long)]
    min_support: Option<usize>,
    /// Matched controls per case.
    #[arg(long)]
    ratio: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Bootstrap resamples for MSD intervals.
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of recall,specificity,precision,accuracy.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<Metric>,
    /// Phenotypes processed in parallel (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Write censored test matrices as sparse triplets.
    #[arg(long)]
    dump_matrices: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding ttd/ and audit/ outputs.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_run(args: RunArgs, file: &FileConfig) -> RunConfig {
    let mut c = file.run_config();
    macro_rules! over {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = args.$flag { c.$field = v; })*
        };
    }
    over!(
        events => events, out => output_dir, window_days => window_days,
        lookback_days => lookback_days, lambda => lambda, tol => tol, max_iter => max_iter,
        test_frac => test_frac, min_support => min_support, ratio => ratio,
        threshold => threshold, resamples => n_resamples, alpha => alpha, seed => seed,
        workers => workers,
    );
    if !args.cohorts.is_empty() {
        c.cohorts = args.cohorts;
    }
    if !args.metrics.is_empty() {
        c.metrics = args.metrics;
    }
    if args.exclude_index_day {
        c.include_index_day = false;
    }
    if args.dump_matrices {
        c.dump_matrices = true;
    }
    c
}

fn resolve_synth(args: SynthArgs, file: &FileConfig) -> (SynthConfig, PathBuf) {
    let mut c = file.synth.clone().unwrap_or_default();
    macro_rules! over {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = args.$flag { c.$field = v; })*
        };
    }
    over!(
        seed => seed, phenotypes => n_phenotypes, control_cohorts => control_cohorts,
        patients_per_group => patients_per_group,
        signal_codes => n_signal_codes, noise_codes => n_noise_codes, signal_rate => signal_rate,
        ttd_men => signal_ttd_mean_men, ttd_women => signal_ttd_mean_women,
        ttd_sd => signal_ttd_sd, noise_rate => noise_rate,
    );
    let out = args
        .out
        .or_else(|| file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("synth"));
    (c, out)
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Synth(args) => {
            let (config, out) = resolve_synth(args, &file);
            let output = synth::generate(&config)?;
            for path in pipeline::write_synth(&output, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Ttd(args) => {
            let config = resolve_run(args, &file);
            let outcome = pipeline::run_ttd(&config)?;
            let u = &outcome.summary.cross_phenotype.unweighted;
            println!(
                "{} phenotypes; women diagnosed later for {:.1}% of conditions (mean diff {:.1} days); wrote {}",
                outcome.summary.cross_phenotype.n_phenotypes,
                100.0 * u.frac_women_later,
                u.mean_diff_days,
                config.output_dir.join("ttd").display()
            );
        }
        Command::Audit(args) => {
            let config = resolve_run(args, &file);
            let reports = pipeline::run_audit(&config)?;
            for r in &reports {
                let parts: Vec<String> = r
                    .metrics
                    .iter()
                    .map(|m| match &m.msd.value {
                        Some(v) => format!("{} MSD {:+.5}", m.metric, v.msd),
                        None => format!("{} MSD n/a", m.metric),
                    })
                    .collect();
                println!("{}: {}", r.phenotype_id, parts.join(", "));
            }
            println!("wrote {}", config.output_dir.join("audit").display());
        }
        Command::Report(args) => {
            let dir = args
                .out
                .or_else(|| file.output_dir.clone())
                .unwrap_or_else(|| RunConfig::default().output_dir);
            print!("{}", pipeline::run_report(&dir)?);
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Runtime => EXIT_RUNTIME,
    }
}

fn kind_name(err: &Error) -> &'static str {
    match err.kind() {
        ErrorKind::Usage => "usage",
        ErrorKind::Data => "data",
        ErrorKind::Runtime => "runtime",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TTDFAIR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = serde_json::json!({
                "error": { "kind": kind_name(&err), "message": err.to_string() }
            });
            eprintln!("{report}");
            ExitCode::from(exit_code(&err))
        }
    }
}

