//! Goal function `h`: an emulated object detector reduced to class counts.
//!
//! A [`DetectorModel`] thins the true objects binomially (at most one
//! detection per true object), optionally relabels detections through a
//! confusion row, and adds Poisson false positives per class. Every random
//! draw is keyed by `(seed, unit index)` or `(seed, class index)`, so a
//! result never depends on evaluation order.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::codec::{check_prob, ObjectCrop, ReconstructionSketch};
use crate::error::{Error, Result};
use crate::scene::{ClassVocabulary, SceneImage, SemanticVector};
use crate::seed::{self, Label};

/// Tolerance on confusion row sums.
const ROW_SUM_SLACK: f64 = 1e-12;

/// Anything the goal function can be applied to.
#[derive(Debug, Clone, Copy)]
pub enum Evaluable<'a> {
    Scene(&'a SceneImage),
    Crops(&'a [ObjectCrop]),
    Sketch(&'a ReconstructionSketch),
}

impl Evaluable<'_> {
    /// The detectable units as vocabulary indices, in a fixed order.
    pub fn units(&self, vocab: &ClassVocabulary) -> Result<Vec<usize>> {
        match self {
            Evaluable::Scene(s) => s
                .objects
                .iter()
                .map(|o| vocab.require(&o.class_name))
                .collect(),
            Evaluable::Crops(crops) => crops.iter().map(|c| vocab.require(&c.class_name)).collect(),
            Evaluable::Sketch(sketch) => {
                let mut out = Vec::with_capacity(sketch.total() as usize);
                for (class, n) in &sketch.objects {
                    let idx = vocab.require(class)?;
                    out.extend(std::iter::repeat_n(idx, *n as usize));
                }
                Ok(out)
            }
        }
    }
}

/// `(cumulative probability, predicted class index)`, ascending.
type CumulativeRow = Vec<(f64, usize)>;

/// Parameters of the emulated detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorModel {
    /// Detection probability for classes without an override.
    pub detect_prob: f64,
    /// Per-class overrides of `detect_prob`.
    pub per_class_detect_prob: BTreeMap<String, f64>,
    /// Expected spurious detections per image per class.
    pub false_positive_rate: f64,
    /// `true class → (predicted class → probability)`. A row's residual mass
    /// is a miss. Classes without a row keep their label.
    pub confusion: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::perfect()
    }
}

impl DetectorModel {
    pub fn perfect() -> Self {
        Self {
            detect_prob: 1.0,
            per_class_detect_prob: BTreeMap::new(),
            false_positive_rate: 0.0,
            confusion: BTreeMap::new(),
        }
    }

    /// A detector that finds each object with probability `p`.
    pub fn with_detect_prob(p: f64) -> Self {
        Self {
            detect_prob: p,
            ..Self::perfect()
        }
    }

    pub fn validate(&self, vocab: &ClassVocabulary) -> Result<()> {
        check_prob("detect_prob", self.detect_prob)?;
        for (class, p) in &self.per_class_detect_prob {
            vocab.require(class)?;
            check_prob("per_class_detect_prob", *p)?;
        }
        if !(self.false_positive_rate.is_finite() && self.false_positive_rate >= 0.0) {
            return Err(Error::param(
                "false_positive_rate",
                format!(
                    "{} must be a finite non-negative rate",
                    self.false_positive_rate
                ),
            ));
        }
        for (truth, row) in &self.confusion {
            vocab.require(truth)?;
            let mut sum = 0.0;
            for (pred, p) in row {
                vocab.require(pred)?;
                check_prob("confusion", *p)?;
                sum += p;
            }
            if sum > 1.0 + ROW_SUM_SLACK {
                return Err(Error::param(
                    "confusion",
                    format!("row `{truth}` sums to {sum} > 1"),
                ));
            }
        }
        Ok(())
    }

    pub fn detect_prob_of(&self, class: &str) -> f64 {
        self.per_class_detect_prob
            .get(class)
            .copied()
            .unwrap_or(self.detect_prob)
    }

    /// Confusion rows resolved to vocabulary indices, cumulative.
    fn resolved_confusion(&self, vocab: &ClassVocabulary) -> Result<Vec<Option<CumulativeRow>>> {
        let mut rows = vec![None; vocab.len()];
        for (truth, row) in &self.confusion {
            let mut acc = 0.0;
            let mut cumulative = Vec::with_capacity(row.len());
            for (pred, p) in row {
                acc += p;
                cumulative.push((acc, vocab.require(pred)?));
            }
            rows[vocab.require(truth)?] = Some(cumulative);
        }
        Ok(rows)
    }
}

/// Backend that evaluates the goal function. The synthetic
/// [`DetectorModel`] is the built-in implementation; real detectors plug in
/// through the same trait.
pub trait GoalEvaluator: Sync {
    fn evaluate(
        &self,
        e: Evaluable<'_>,
        vocab: &ClassVocabulary,
        seed: u64,
    ) -> Result<SemanticVector>;

    /// Sum of per-crop evaluations, each crop seeded by its index.
    fn evaluate_crops(
        &self,
        crops: &[ObjectCrop],
        vocab: &ClassVocabulary,
        seed: u64,
    ) -> Result<SemanticVector> {
        let mut acc = SemanticVector::zeros(vocab.len());
        for (i, crop) in crops.iter().enumerate() {
            let d = self.evaluate(
                Evaluable::Crops(std::slice::from_ref(crop)),
                vocab,
                crop_seed(seed, i),
            )?;
            acc.add_assign(&d)?;
        }
        Ok(acc)
    }
}

/// Seed used for the `index`-th crop of a crop list.
pub fn crop_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, &[Label::Str("crop"), Label::from(index)])
}

impl GoalEvaluator for DetectorModel {
    fn evaluate(
        &self,
        e: Evaluable<'_>,
        vocab: &ClassVocabulary,
        seed: u64,
    ) -> Result<SemanticVector> {
        detect(e, self, vocab, seed)
    }
}

/// Applies the emulated detector to `e`.
pub fn detect(
    e: Evaluable<'_>,
    model: &DetectorModel,
    vocab: &ClassVocabulary,
    seed: u64,
) -> Result<SemanticVector> {
    model.validate(vocab)?;
    let units = e.units(vocab)?;
    let probs: Vec<f64> = vocab
        .classes()
        .iter()
        .map(|c| model.detect_prob_of(c))
        .collect();
    let confusion = model.resolved_confusion(vocab)?;
    let mut out = SemanticVector::zeros(vocab.len());

    for (i, &class) in units.iter().enumerate() {
        let mut rng = seed::rng_for(seed, &[Label::Str("unit"), Label::from(i)]);
        let found = rng.random::<f64>() < probs[class];
        let relabel = rng.random::<f64>();
        if !found {
            continue;
        }
        match &confusion[class] {
            None => out.bump(class, 1.0),
            Some(row) => {
                if let Some(&(_, predicted)) = row.iter().find(|(cum, _)| relabel < *cum) {
                    out.bump(predicted, 1.0);
                }
            }
        }
    }

    if model.false_positive_rate > 0.0 {
        let poisson = Poisson::new(model.false_positive_rate)
            .map_err(|e| Error::param("false_positive_rate", e.to_string()))?;
        for class in 0..vocab.len() {
            let mut rng = seed::rng_for(seed, &[Label::Str("fp"), Label::from(class)]);
            out.bump(class, poisson.sample(&mut rng));
        }
    }
    Ok(out)
}

/// Applies the detector to each crop and accumulates the results.
pub fn detect_objects_list(
    crops: &[ObjectCrop],
    model: &DetectorModel,
    vocab: &ClassVocabulary,
    seed: u64,
) -> Result<SemanticVector> {
    model.evaluate_crops(crops, vocab, seed)
}
