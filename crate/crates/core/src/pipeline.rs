//! The end-to-end path for one image: encode, transmit, decode, evaluate
//! the goal function on both ends, score.
//!
//! Seeds are derived as `run seed → config name → image id → stage`, so each
//! image's result is independent of scheduling and of which other images or
//! configurations are in the run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{transmit, ChannelConfig};
use crate::codec::{
    decode_caption, encode_caption, encode_crops, encode_raw, CaptionNoise, PayloadBody,
    DEFAULT_CAPTIONS,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::goal::{Evaluable, GoalEvaluator};
use crate::metrics::{self, MetricRecord, Verdict};
use crate::scene::{ClassVocabulary, SceneImage, SemanticVector};
use crate::seed::{self, Label};

fn default_captions() -> usize {
    DEFAULT_CAPTIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "codec", rename_all = "lowercase")]
pub enum CodecSpec {
    Caption {
        #[serde(default = "default_captions")]
        captions: usize,
        #[serde(default)]
        noise: CaptionNoise,
    },
    Crops,
    Raw,
}

impl CodecSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            CodecSpec::Caption { .. } => "caption",
            CodecSpec::Crops => "crops",
            CodecSpec::Raw => "raw",
        }
    }
}

/// A named candidate encoder/decoder pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub name: String,
    #[serde(flatten)]
    pub spec: CodecSpec,
}

impl CodecConfig {
    pub fn caption(name: impl Into<String>, captions: usize, noise: CaptionNoise) -> Self {
        Self {
            name: name.into(),
            spec: CodecSpec::Caption { captions, noise },
        }
    }

    pub fn crops(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            spec: CodecSpec::Crops,
        }
    }

    pub fn raw(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            spec: CodecSpec::Raw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::param("name", "codec configurations need a name"));
        }
        if let CodecSpec::Caption { captions, noise } = &self.spec {
            if *captions == 0 {
                return Err(Error::param("captions", "at least one caption is required"));
            }
            noise.validate()?;
        }
        Ok(())
    }
}

/// What the received vector is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The annotated object counts.
    #[default]
    GroundTruth,
    /// The goal evaluator applied to the original scene.
    Detector,
}

/// Which images enter the dataset means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingPolicy {
    /// Every image; an undelivered image scores as if nothing was received.
    #[default]
    IncludeUndelivered,
    DeliveredOnly,
}

impl AveragingPolicy {
    pub fn includes(self, record: &MetricRecord) -> bool {
        match self {
            AveragingPolicy::IncludeUndelivered => true,
            AveragingPolicy::DeliveredOnly => record.delivered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineOptions {
    pub reference: ReferenceMode,
    pub averaging: AveragingPolicy,
}

/// Everything that stays fixed across the images of one evaluation.
#[derive(Clone, Copy)]
pub struct Environment<'a> {
    pub vocab: &'a ClassVocabulary,
    pub evaluator: &'a dyn GoalEvaluator,
    pub channel: &'a ChannelConfig,
    pub options: PipelineOptions,
}

/// Goal vectors on both ends plus the scored record.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageOutcome {
    pub record: MetricRecord,
    pub reference: SemanticVector,
    pub received: SemanticVector,
}

/// Seed of one configuration within a run.
pub fn config_seed(run_seed: u64, config_name: &str) -> u64 {
    seed::derive(run_seed, &[Label::Str("config"), Label::Str(config_name)])
}

fn stage(image_seed: u64, tag: &str) -> u64 {
    seed::derive(image_seed, &[Label::Str(tag)])
}

/// Runs one image through the pipeline of `codec`.
pub fn process_image(
    codec: &CodecConfig,
    scene: &SceneImage,
    env: &Environment<'_>,
    config_seed: u64,
) -> Result<ImageOutcome> {
    let vocab = env.vocab;
    let image_seed = seed::derive(config_seed, &[Label::Str("image"), Label::Str(&scene.id)]);

    let payload = match &codec.spec {
        CodecSpec::Caption { captions, noise } => {
            encode_caption(scene, vocab, *captions, noise, stage(image_seed, "encode"))?
        }
        CodecSpec::Crops => encode_crops(scene),
        CodecSpec::Raw => encode_raw(scene),
    };
    let delivery = transmit(&payload, env.channel, stage(image_seed, "channel"));

    let received = if !delivery.delivered {
        SemanticVector::zeros(vocab.len())
    } else {
        let detect_seed = stage(image_seed, "detect");
        match (&codec.spec, payload.body()) {
            (CodecSpec::Caption { noise, .. }, PayloadBody::Captions(_)) => {
                let sketches = decode_caption(&payload, vocab, noise, stage(image_seed, "decode"))?;
                let detections = sketches
                    .iter()
                    .enumerate()
                    .map(|(n, sketch)| {
                        let s = seed::derive(detect_seed, &[Label::from(n)]);
                        env.evaluator.evaluate(Evaluable::Sketch(sketch), vocab, s)
                    })
                    .collect::<Result<Vec<_>>>()?;
                SemanticVector::mean(&detections, vocab.len())?
            }
            (_, PayloadBody::Crops(crops)) => {
                env.evaluator.evaluate_crops(crops, vocab, detect_seed)?
            }
            (_, PayloadBody::Raw(image)) => {
                env.evaluator
                    .evaluate(Evaluable::Scene(image), vocab, detect_seed)?
            }
            (_, PayloadBody::Captions(_)) => {
                unreachable!("caption payloads come from the caption codec")
            }
        }
    };

    let reference = match env.options.reference {
        ReferenceMode::GroundTruth => scene.semantic_truth(vocab)?,
        ReferenceMode::Detector => env.evaluator.evaluate(
            Evaluable::Scene(scene),
            vocab,
            stage(image_seed, "reference"),
        )?,
    };

    let source_bits = scene.binary_size();
    let gain = metrics::gain(source_bits, payload.size_bits())?;
    let error = match metrics::semantic_error(&reference, &received) {
        Ok(e) => Some(e),
        Err(Error::EmptyTruth) => None,
        Err(e) => return Err(e),
    };
    let record = MetricRecord {
        image_id: scene.id.clone(),
        codec: codec.name.clone(),
        source_bits,
        payload_bits: payload.size_bits(),
        gain,
        error,
        weighted_error: error.map(|e| metrics::weighted_error(gain, e)),
        delivered: delivery.delivered,
        budget_violated: delivery.violated_budget,
        latency_s: delivery.latency_s,
    };
    Ok(ImageOutcome {
        record,
        reference,
        received,
    })
}

/// Dataset-level means of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub config: String,
    pub mean_gain: f64,
    pub mean_error: f64,
    pub mean_weighted_error: f64,
    /// Images that entered the gain mean.
    pub averaged_images: usize,
    /// Images whose error is defined and entered the error means.
    pub error_images: usize,
    pub empty_truth_images: usize,
    pub undelivered_images: usize,
    pub verdict: Option<Verdict>,
    pub records: Vec<MetricRecord>,
}

impl EvaluationSummary {
    /// Reduces per-image records in their given order.
    ///
    /// With no included images the gain mean is 0; with no defined errors
    /// the error means are 0.
    pub fn from_records(
        config: impl Into<String>,
        records: Vec<MetricRecord>,
        averaging: AveragingPolicy,
    ) -> Self {
        let included: Vec<&MetricRecord> =
            records.iter().filter(|r| averaging.includes(r)).collect();
        let gains: Vec<f64> = included.iter().map(|r| r.gain).collect();
        let errors: Vec<f64> = included.iter().filter_map(|r| r.error).collect();
        let weighted: Vec<f64> = included.iter().filter_map(|r| r.weighted_error).collect();
        Self {
            config: config.into(),
            mean_gain: metrics::mean(&gains).unwrap_or(0.0),
            mean_error: metrics::mean(&errors).unwrap_or(0.0),
            mean_weighted_error: metrics::mean(&weighted).unwrap_or(0.0),
            averaged_images: gains.len(),
            error_images: errors.len(),
            empty_truth_images: records.iter().filter(|r| r.empty_truth()).count(),
            undelivered_images: records.iter().filter(|r| !r.delivered).count(),
            verdict: None,
            records,
        }
    }

    pub fn with_verdict(mut self, spec: &metrics::ConstraintSpec) -> Self {
        self.verdict = Some(spec.check(self.mean_gain, self.mean_error));
        self
    }
}

/// Runs every image of `dataset` through `cfg` on the current rayon pool and
/// reduces in dataset order.
pub fn evaluate_config(
    cfg: &CodecConfig,
    dataset: &Dataset,
    evaluator: &dyn GoalEvaluator,
    channel: &ChannelConfig,
    options: PipelineOptions,
    run_seed: u64,
) -> Result<EvaluationSummary> {
    Ok(EvaluationSummary::from_records(
        &cfg.name,
        evaluate_images(cfg, dataset, evaluator, channel, options, run_seed)?
            .into_iter()
            .map(|o| o.record)
            .collect(),
        options.averaging,
    ))
}

/// Per-image outcomes in dataset order.
pub fn evaluate_images(
    cfg: &CodecConfig,
    dataset: &Dataset,
    evaluator: &dyn GoalEvaluator,
    channel: &ChannelConfig,
    options: PipelineOptions,
    run_seed: u64,
) -> Result<Vec<ImageOutcome>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    channel.validate()?;
    let env = Environment {
        vocab: &dataset.vocabulary,
        evaluator,
        channel,
        options,
    };
    let seed = config_seed(run_seed, &cfg.name);
    dataset
        .images
        .par_iter()
        .map(|scene| process_image(cfg, scene, &env, seed))
        .collect()
}
