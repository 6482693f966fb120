//! Annotation-level image model.
//!
//! A [`SceneImage`] stands in for an original image: its dimensions, the bit
//! cost of one pixel, and the labelled object instances it contains. No
//! pixel data is stored.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits per pixel used by default: 3 channels stored as 64-bit values.
pub const DEFAULT_PIXEL_BITS: u32 = 3 * 64;

/// Ordered set of class names. The order fixes [`SemanticVector`] indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassVocabulary {
    classes: Vec<String>,
    index: HashMap<String, usize>,
}

impl ClassVocabulary {
    /// Class names must be non-empty, unique, and free of `;` and newlines
    /// (both are caption delimiters).
    pub fn new<I, S>(classes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let classes: Vec<String> = classes.into_iter().map(Into::into).collect();
        if classes.is_empty() {
            return Err(Error::InvalidVocabulary("vocabulary is empty".into()));
        }
        let mut index = HashMap::with_capacity(classes.len());
        for (i, name) in classes.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidVocabulary(format!(
                    "class {i} has an empty name"
                )));
            }
            if name.contains([';', '\n', '\r']) {
                return Err(Error::InvalidVocabulary(format!(
                    "class `{name}` contains a reserved delimiter"
                )));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidVocabulary(format!(
                    "duplicate class `{name}`"
                )));
            }
        }
        Ok(Self { classes, index })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownClass(name.to_owned()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.classes[index]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

impl Serialize for ClassVocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.classes.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassVocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let classes = Vec::<String>::deserialize(d)?;
        ClassVocabulary::new(classes).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned box in integer pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    fn fits(&self, width: u32, height: u32) -> bool {
        u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }
}

impl Serialize for BBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y, self.w, self.h].serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y, w, h] = <[u32; 4]>::deserialize(d)?;
        Ok(BBox { x, y, w, h })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectInstance {
    #[serde(rename = "class")]
    pub class_name: String,
    pub bbox: BBox,
}

impl ObjectInstance {
    pub fn new(class_name: impl Into<String>, bbox: BBox) -> Self {
        Self {
            class_name: class_name.into(),
            bbox,
        }
    }
}

fn default_pixel_bits() -> u32 {
    DEFAULT_PIXEL_BITS
}

/// The original image `X`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneImage {
    pub id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_pixel_bits")]
    pub pixel_bits: u32,
    #[serde(default)]
    pub objects: Vec<ObjectInstance>,
}

impl SceneImage {
    /// Builds a scene and checks the vocabulary-independent invariants.
    pub fn new(
        id: impl Into<String>,
        width: u32,
        height: u32,
        pixel_bits: u32,
        objects: Vec<ObjectInstance>,
    ) -> Result<Self> {
        let scene = Self {
            id: id.into(),
            width,
            height,
            pixel_bits,
            objects,
        };
        let violations = scene.structural_violations();
        if violations.is_empty() {
            Ok(scene)
        } else {
            Err(Error::InvalidScene {
                id: scene.id,
                violations,
            })
        }
    }

    /// Total pixel area.
    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    /// Binary size of the raw image: `width * height * pixel_bits`.
    pub fn binary_size(&self) -> u64 {
        self.area() * u64::from(self.pixel_bits)
    }

    /// Ground-truth class counts over `vocab`.
    pub fn semantic_truth(&self, vocab: &ClassVocabulary) -> Result<SemanticVector> {
        let mut v = SemanticVector::zeros(vocab.len());
        for obj in &self.objects {
            v.counts[vocab.require(&obj.class_name)?] += 1.0;
        }
        Ok(v)
    }

    /// All invariant violations against `vocab`; empty means valid.
    pub fn validate(&self, vocab: &ClassVocabulary) -> Vec<Violation> {
        let mut out = self.structural_violations();
        for (i, obj) in self.objects.iter().enumerate() {
            if !vocab.contains(&obj.class_name) {
                out.push(Violation {
                    code: ViolationCode::UnknownClass,
                    object: Some(i),
                    detail: format!("class `{}`", obj.class_name),
                });
            }
        }
        out
    }

    fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |code, object, detail: String| {
            out.push(Violation {
                code,
                object,
                detail,
            })
        };
        if self.width == 0 {
            push(ViolationCode::NonPositiveWidth, None, "width is 0".into());
        }
        if self.height == 0 {
            push(ViolationCode::NonPositiveHeight, None, "height is 0".into());
        }
        if self.pixel_bits == 0 {
            push(
                ViolationCode::NonPositivePixelBits,
                None,
                "pixel_bits is 0".into(),
            );
        }
        for (i, obj) in self.objects.iter().enumerate() {
            let b = obj.bbox;
            if b.w == 0 || b.h == 0 {
                push(
                    ViolationCode::EmptyBbox,
                    Some(i),
                    format!("bbox {}x{}", b.w, b.h),
                );
            }
            if !b.fits(self.width, self.height) {
                push(
                    ViolationCode::BboxOutOfBounds,
                    Some(i),
                    format!(
                        "bbox ({}, {}, {}, {}) exceeds {}x{}",
                        b.x, b.y, b.w, b.h, self.width, self.height
                    ),
                );
            }
        }
        out
    }
}

/// Machine-readable violation code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    NonPositiveWidth,
    NonPositiveHeight,
    NonPositivePixelBits,
    EmptyBbox,
    BboxOutOfBounds,
    UnknownClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Index of the offending object, if the violation is object-level.
    pub object: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.object {
            Some(i) => write!(f, "{:?} (object {i}): {}", self.code, self.detail),
            None => write!(f, "{:?}: {}", self.code, self.detail),
        }
    }
}

/// Free-function form of [`SceneImage::binary_size`].
pub fn binary_size(scene: &SceneImage) -> u64 {
    scene.binary_size()
}

/// Free-function form of [`SceneImage::semantic_truth`].
pub fn semantic_truth(scene: &SceneImage, vocab: &ClassVocabulary) -> Result<SemanticVector> {
    scene.semantic_truth(vocab)
}

/// Free-function form of [`SceneImage::validate`].
pub fn validate_scene(scene: &SceneImage, vocab: &ClassVocabulary) -> Vec<Violation> {
    scene.validate(vocab)
}

/// Per-class counts in vocabulary order. Ground truth and single detector
/// outputs are integer valued; averaged reconstructions may be fractional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SemanticVector {
    counts: Vec<f64>,
}

impl SemanticVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            counts: vec![0.0; len],
        }
    }

    /// Entries must be finite and non-negative.
    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        if let Some(bad) = counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::param(
                "counts",
                format!("entry {bad} is not a non-negative count"),
            ));
        }
        Ok(Self { counts })
    }

    /// Builds a vector from a class → count map; absent classes count zero.
    pub fn from_class_counts<'a, I>(vocab: &ClassVocabulary, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, u64)>,
    {
        let mut v = Self::zeros(vocab.len());
        for (class, n) in counts {
            v.counts[vocab.require(class)?] += n as f64;
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.counts
    }

    pub fn get(&self, index: usize) -> f64 {
        self.counts[index]
    }

    pub fn sum(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.counts.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|c| *c == 0.0)
    }

    pub(crate) fn bump(&mut self, index: usize, by: f64) {
        self.counts[index] += by;
    }

    /// Elementwise accumulation; lengths must match.
    pub fn add_assign(&mut self, other: &SemanticVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> SemanticVector {
        SemanticVector {
            counts: self.counts.iter().map(|c| c * factor).collect(),
        }
    }

    /// Arithmetic mean of equally sized vectors, summed in slice order.
    pub fn mean(vectors: &[SemanticVector], len: usize) -> Result<SemanticVector> {
        let mut acc = SemanticVector::zeros(len);
        if vectors.is_empty() {
            return Ok(acc);
        }
        for v in vectors {
            acc.add_assign(v)?;
        }
        Ok(acc.scaled(1.0 / vectors.len() as f64))
    }
}
