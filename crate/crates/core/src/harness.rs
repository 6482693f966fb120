//! Experiment runs: the caption and crop pipelines over a dataset, with
//! cumulative-average reporting and CSV export.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::dataset::{schema_error, Dataset};
use crate::error::{Error, Result};
use crate::goal::{DetectorModel, GoalEvaluator};
use crate::metrics::{ConstraintSpec, MetricRecord, RunningMean, Verdict};
use crate::pipeline::{
    evaluate_config, CodecConfig, CodecSpec, EvaluationSummary, PipelineOptions,
};
use crate::scene::ClassVocabulary;
use crate::synth::{self, SynthConfig};

/// Column order of exported CSV files.
pub const CSV_HEADER: [&str; 11] = [
    "image_id",
    "codec",
    "source_bits",
    "payload_bits",
    "gain",
    "error",
    "weighted_error",
    "delivered",
    "cum_gain",
    "cum_error",
    "cum_weighted_error",
];

/// One experiment. Loadable from JSON; the scenario presets use this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Native dataset file. Relative paths in a config file resolve against
    /// the file's directory.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    /// Generated dataset, used when `dataset` is absent.
    #[serde(default)]
    pub synthetic: Option<SynthConfig>,
    /// Replaces the dataset vocabulary.
    #[serde(default)]
    pub vocabulary: Option<Vec<String>>,
    pub codec: CodecConfig,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub constraints: Option<ConstraintSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: PipelineOptions,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub csv_out: Option<PathBuf>,
    #[serde(default)]
    pub plot_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(codec: CodecConfig) -> Self {
        Self {
            name: None,
            dataset: None,
            synthetic: None,
            vocabulary: None,
            codec,
            detector: DetectorModel::perfect(),
            channel: ChannelConfig::default(),
            constraints: None,
            seed: 0,
            options: PipelineOptions::default(),
            threads: None,
            csv_out: None,
            plot_out: None,
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(json);
        serde_path_to_error::deserialize(de).map_err(schema_error)
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset, &mut cfg.csv_out, &mut cfg.plot_out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Loads or generates the dataset and applies the vocabulary override.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let dataset = match (&self.dataset, &self.synthetic) {
            (Some(path), _) => Dataset::load(path)?,
            (None, Some(synth)) => synth::generate(synth, self.seed)?,
            (None, None) => {
                return Err(Error::param(
                    "dataset",
                    "no dataset path or synthetic generator given",
                ))
            }
        };
        match &self.vocabulary {
            Some(classes) => {
                dataset.with_vocabulary(ClassVocabulary::new(classes.iter().cloned())?)
            }
            None => Ok(dataset),
        }
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub summary: EvaluationSummary,
    /// Running means of the per-image columns, over included images. An
    /// entry is `None` until the first included, defined value.
    pub cum_gain: Vec<Option<f64>>,
    pub cum_error: Vec<Option<f64>>,
    pub cum_weighted_error: Vec<Option<f64>>,
    pub verdict: Option<Verdict>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn codec(&self) -> &str {
        &self.summary.config
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.summary.records
    }

    fn build(summary: EvaluationSummary, options: &PipelineOptions, wall_clock: Duration) -> Self {
        let include = |r: &&MetricRecord| options.averaging.includes(r);
        let series = |f: fn(&MetricRecord) -> Option<f64>| {
            running_mean(
                summary
                    .records
                    .iter()
                    .map(|r| Some(r).filter(include).and_then(f)),
            )
        };
        let cum_gain = series(|r| Some(r.gain));
        let cum_error = series(|r| r.error);
        let cum_weighted_error = series(|r| r.weighted_error);
        Self {
            verdict: summary.verdict,
            summary,
            cum_gain,
            cum_error,
            cum_weighted_error,
            wall_clock,
        }
    }
}

/// Running mean over the defined entries, carried forward across gaps.
/// Matches [`crate::metrics::cumulative_average`] on the defined subsequence.
pub fn running_mean(values: impl IntoIterator<Item = Option<f64>>) -> Vec<Option<f64>> {
    let mut acc = RunningMean::default();
    values
        .into_iter()
        .map(|v| {
            if let Some(x) = v {
                acc.push(x);
            }
            acc.get()
        })
        .collect()
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::param("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `cfg` with any codec and the synthetic detector.
pub fn run(cfg: &RunConfig, dataset: &Dataset) -> Result<RunReport> {
    cfg.detector.validate(&dataset.vocabulary)?;
    run_with_evaluator(cfg, dataset, &cfg.detector)
}

/// Runs `cfg` with an arbitrary goal evaluator backend.
pub fn run_with_evaluator(
    cfg: &RunConfig,
    dataset: &Dataset,
    evaluator: &dyn GoalEvaluator,
) -> Result<RunReport> {
    let started = Instant::now();
    let summary = with_pool(cfg.threads, || {
        evaluate_config(
            &cfg.codec,
            dataset,
            evaluator,
            &cfg.channel,
            cfg.options,
            cfg.seed,
        )
    })??;
    let summary = match &cfg.constraints {
        Some(spec) => {
            spec.validate()?;
            summary.with_verdict(spec)
        }
        None => summary,
    };
    let report = RunReport::build(summary, &cfg.options, started.elapsed());
    log::info!(
        "{}: {} images, mean gain {:.6}, mean error {:.6}, mean weighted error {:.6} in {:?}",
        report.codec(),
        report.records().len(),
        report.summary.mean_gain,
        report.summary.mean_error,
        report.summary.mean_weighted_error,
        report.wall_clock
    );
    Ok(report)
}

/// Caption pipeline: `K` captions per image, one regenerated sketch per
/// caption, goal vectors averaged over the captions.
pub fn run_algorithm1(cfg: &RunConfig, dataset: &Dataset) -> Result<RunReport> {
    if !matches!(cfg.codec.spec, CodecSpec::Caption { .. }) {
        return Err(Error::param(
            "codec",
            "the caption pipeline needs a caption codec",
        ));
    }
    run(cfg, dataset)
}

/// Crop pipeline: objects sent without background, the goal function
/// applied per crop and accumulated.
pub fn run_algorithm2(cfg: &RunConfig, dataset: &Dataset) -> Result<RunReport> {
    if !matches!(cfg.codec.spec, CodecSpec::Crops) {
        return Err(Error::param(
            "codec",
            "the crop pipeline needs the crops codec",
        ));
    }
    run(cfg, dataset)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders the report as CSV text.
pub fn csv_string(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::param("csv", e.to_string());
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for (i, r) in report.records().iter().enumerate() {
        w.write_record([
            r.image_id.clone(),
            r.codec.clone(),
            r.source_bits.to_string(),
            r.payload_bits.to_string(),
            r.gain.to_string(),
            fmt_opt(r.error),
            fmt_opt(r.weighted_error),
            r.delivered.to_string(),
            fmt_opt(report.cum_gain[i]),
            fmt_opt(report.cum_error[i]),
            fmt_opt(report.cum_weighted_error[i]),
        ])
        .map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::param("csv", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn export_csv(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if report.records().is_empty() {
        return Err(Error::EmptyDataset);
    }
    std::fs::write(path, csv_string(report)?).map_err(|e| Error::io(path, e))
}
