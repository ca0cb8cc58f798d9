//! TOML config file support. Command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use ttdfair::fairness::Metric;
use ttdfair::pipeline::RunConfig;
use ttdfair::synth::SynthConfig;
use ttdfair::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub events: Option<PathBuf>,
    pub cohorts: Option<Vec<PathBuf>>,
    pub output_dir: Option<PathBuf>,
    pub window_days: Option<u32>,
    pub lookback_days: Option<u32>,
    pub include_index_day: Option<bool>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub test_frac: Option<f64>,
    pub min_support: Option<usize>,
    pub ratio: Option<usize>,
    pub threshold: Option<f64>,
    pub n_resamples: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub metrics: Option<Vec<Metric>>,
    pub workers: Option<usize>,
    pub dump_matrices: Option<bool>,
    pub synth: Option<SynthConfig>,
}

impl FileConfig {
    /// Loads `path`; relative paths inside are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.events.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.output_dir.as_mut() {
            resolve(p);
        }
        for p in cfg.cohorts.iter_mut().flatten() {
            resolve(p);
        }
        Ok(cfg)
    }

    /// File values over the defaults.
    pub fn run_config(&self) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            events: self.events.clone().unwrap_or(d.events),
            cohorts: self.cohorts.clone().unwrap_or(d.cohorts),
            output_dir: self.output_dir.clone().unwrap_or(d.output_dir),
            window_days: self.window_days.unwrap_or(d.window_days),
            lookback_days: self.lookback_days.unwrap_or(d.lookback_days),
            include_index_day: self.include_index_day.unwrap_or(d.include_index_day),
            lambda: self.lambda.unwrap_or(d.lambda),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            test_frac: self.test_frac.unwrap_or(d.test_frac),
            min_support: self.min_support.unwrap_or(d.min_support),
            ratio: self.ratio.unwrap_or(d.ratio),
            threshold: self.threshold.unwrap_or(d.threshold),
            n_resamples: self.n_resamples.unwrap_or(d.n_resamples),
            alpha: self.alpha.unwrap_or(d.alpha),
            seed: self.seed.unwrap_or(d.seed),
            metrics: self.metrics.clone().unwrap_or(d.metrics),
            workers: self.workers.unwrap_or(d.workers),
            dump_matrices: self.dump_matrices.unwrap_or(d.dump_matrices),
        }
    }
}
