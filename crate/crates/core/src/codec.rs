//! Semantic encoders and decoders.
//!
//! Three built-in codecs map a [`SceneImage`] to a transmitted [`Payload`]
//! and back to something the goal evaluator can consume:
//!
//! * **caption**: `K` short text descriptions in a fixed grammar, each
//!   regenerated at the receiver into a [`ReconstructionSketch`];
//! * **crops**: the object regions only, background removed; the receiver
//!   uses them as-is;
//! * **raw**: the whole image, the traditional baseline.
//!
//! # Caption grammar
//!
//! ```text
//! caption := "" | item (";" item)*
//! item    := count " " class_name
//! ```
//!
//! Counts are positive decimals without leading zeros; items appear in
//! vocabulary order, at most once per class. A caption set is serialized by
//! joining captions with `"\n"`, and its size is 8 bits per UTF-8 byte of
//! that serialization.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ClassVocabulary, SceneImage, SemanticVector};
use crate::seed::{self, Label};

/// Number of captions per image used unless configured otherwise.
pub const DEFAULT_CAPTIONS: usize = 5;

/// Imperfection model for the caption path: the captioner may omit objects
/// and the generator may fail to draw them or get counts slightly wrong.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaptionNoise {
    /// Probability that a given object is mentioned in a given caption.
    pub p_mention: f64,
    /// Probability that a mentioned object is realized by the generator.
    pub p_realize: f64,
    /// Maximum absolute integer perturbation of each realized class count.
    pub count_jitter: u32,
}

impl Default for CaptionNoise {
    fn default() -> Self {
        Self::NOISELESS
    }
}

impl CaptionNoise {
    pub const NOISELESS: CaptionNoise = CaptionNoise {
        p_mention: 1.0,
        p_realize: 1.0,
        count_jitter: 0,
    };

    pub fn validate(&self) -> Result<()> {
        check_prob("p_mention", self.p_mention)?;
        check_prob("p_realize", self.p_realize)
    }
}

pub(crate) fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{p} is not a probability")))
    }
}

/// `K` captions describing one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaptionSet {
    captions: Vec<String>,
}

impl CaptionSet {
    /// Every caption must parse under the grammar against `vocab`.
    pub fn new(captions: Vec<String>, vocab: &ClassVocabulary) -> Result<Self> {
        if captions.is_empty() {
            return Err(Error::param(
                "captions",
                "a caption set needs at least one caption",
            ));
        }
        for (i, c) in captions.iter().enumerate() {
            parse_caption(c, vocab).map_err(|e| e.in_caption(i))?;
        }
        Ok(Self { captions })
    }

    /// Builds a set without grammar checks. Decoding will report any
    /// malformed caption as a parse error, which is how corrupted payloads
    /// surface.
    pub fn unchecked(captions: Vec<String>) -> Self {
        Self { captions }
    }

    pub fn captions(&self) -> &[String] {
        &self.captions
    }

    pub fn len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }

    /// Canonical wire body: captions joined by newlines.
    pub fn serialize(&self) -> String {
        self.captions.join("\n")
    }

    pub fn size_bits(&self) -> u64 {
        let bytes: usize = self.captions.iter().map(String::len).sum::<usize>()
            + self.captions.len().saturating_sub(1);
        8 * bytes as u64
    }
}

/// An object region sent without its background.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectCrop {
    pub class_name: String,
    pub w: u32,
    pub h: u32,
    pub pixel_bits: u32,
}

impl ObjectCrop {
    pub fn size_bits(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h) * u64::from(self.pixel_bits)
    }
}

/// Semantic-level stand-in for a reconstructed image: which objects it
/// actually contains.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReconstructionSketch {
    /// Class → count; zero counts are not stored.
    pub objects: BTreeMap<String, u64>,
    /// Which caption or crop set produced this sketch.
    pub provenance: String,
}

impl ReconstructionSketch {
    pub fn from_counts(
        counts: impl IntoIterator<Item = (String, u64)>,
        provenance: impl Into<String>,
    ) -> Self {
        let mut objects = BTreeMap::new();
        for (class, n) in counts {
            if n > 0 {
                *objects.entry(class).or_insert(0) += n;
            }
        }
        Self {
            objects,
            provenance: provenance.into(),
        }
    }

    pub fn total(&self) -> u64 {
        self.objects.values().sum()
    }

    pub fn to_vector(&self, vocab: &ClassVocabulary) -> Result<SemanticVector> {
        SemanticVector::from_class_counts(vocab, self.objects.iter().map(|(k, v)| (k.as_str(), *v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PayloadKind {
    Captions,
    Crops,
    Raw,
}

impl PayloadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PayloadKind::Captions => "captions",
            PayloadKind::Crops => "crops",
            PayloadKind::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayloadBody {
    Captions(CaptionSet),
    Crops(Vec<ObjectCrop>),
    Raw(SceneImage),
}

/// Output of the semantic encoder, with its exact transmitted size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    body: PayloadBody,
    size_bits: u64,
}

impl Payload {
    pub fn new(body: PayloadBody) -> Self {
        let size_bits = match &body {
            PayloadBody::Captions(c) => c.size_bits(),
            PayloadBody::Crops(crops) => crops.iter().map(ObjectCrop::size_bits).sum(),
            PayloadBody::Raw(scene) => scene.binary_size(),
        };
        Self { body, size_bits }
    }

    pub fn kind(&self) -> PayloadKind {
        match self.body {
            PayloadBody::Captions(_) => PayloadKind::Captions,
            PayloadBody::Crops(_) => PayloadKind::Crops,
            PayloadBody::Raw(_) => PayloadKind::Raw,
        }
    }

    pub fn body(&self) -> &PayloadBody {
        &self.body
    }

    pub fn size_bits(&self) -> u64 {
        self.size_bits
    }

    fn mismatch(&self, expected: PayloadKind) -> Error {
        Error::PayloadKind {
            expected: expected.as_str(),
            actual: self.kind().as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct CaptionParseError {
    pub caption: Option<usize>,
    pub text: String,
    pub reason: String,
}

impl CaptionParseError {
    fn new(text: &str, reason: impl Into<String>) -> Self {
        Self {
            caption: None,
            text: text.to_owned(),
            reason: reason.into(),
        }
    }

    fn in_caption(mut self, index: usize) -> Self {
        self.caption = Some(index);
        self
    }
}

impl fmt::Display for CaptionParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.caption {
            Some(i) => write!(f, "caption {i} `{}`: {}", self.text, self.reason),
            None => write!(f, "caption `{}`: {}", self.text, self.reason),
        }
    }
}

/// Renders class counts (vocabulary order) as a canonical caption. Zero
/// counts are omitted.
pub fn serialize_caption(vocab: &ClassVocabulary, counts: &[u64]) -> String {
    let mut out = String::new();
    for (i, n) in counts.iter().enumerate() {
        if *n == 0 {
            continue;
        }
        if !out.is_empty() {
            out.push(';');
        }
        out.push_str(&n.to_string());
        out.push(' ');
        out.push_str(vocab.name(i));
    }
    out
}

/// Parses a canonical caption into `(class index, count)` pairs.
pub fn parse_caption(
    caption: &str,
    vocab: &ClassVocabulary,
) -> std::result::Result<Vec<(usize, u64)>, CaptionParseError> {
    if caption.is_empty() {
        return Ok(Vec::new());
    }
    let mut items = Vec::new();
    let mut last: Option<usize> = None;
    for item in caption.split(';') {
        let (count, class) = item.split_once(' ').ok_or_else(|| {
            CaptionParseError::new(caption, format!("item `{item}` lacks a count"))
        })?;
        if count.is_empty() || !count.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CaptionParseError::new(
                caption,
                format!("`{count}` is not a count"),
            ));
        }
        if count.starts_with('0') {
            return Err(CaptionParseError::new(
                caption,
                format!("count `{count}` is zero or has a leading zero"),
            ));
        }
        let n: u64 = count
            .parse()
            .map_err(|_| CaptionParseError::new(caption, format!("count `{count}` overflows")))?;
        let idx = vocab
            .index_of(class)
            .ok_or_else(|| CaptionParseError::new(caption, format!("unknown class `{class}`")))?;
        if last.is_some_and(|prev| idx <= prev) {
            return Err(CaptionParseError::new(
                caption,
                format!("class `{class}` is out of vocabulary order or repeated"),
            ));
        }
        last = Some(idx);
        items.push((idx, n));
    }
    Ok(items)
}

/// Caption encoder. Each caption independently mentions each object with
/// probability `p_mention`; mentions of one class aggregate into one item.
pub fn encode_caption(
    scene: &SceneImage,
    vocab: &ClassVocabulary,
    captions: usize,
    noise: &CaptionNoise,
    seed: u64,
) -> Result<Payload> {
    if captions == 0 {
        return Err(Error::param("captions", "at least one caption is required"));
    }
    noise.validate()?;
    let classes = scene
        .objects
        .iter()
        .map(|o| vocab.require(&o.class_name))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(captions);
    for n in 0..captions {
        let mut rng = seed::rng_for(seed, &[Label::Str("caption"), Label::from(n)]);
        let mut counts = vec![0u64; vocab.len()];
        for &c in &classes {
            if rng.random::<f64>() < noise.p_mention {
                counts[c] += 1;
            }
        }
        out.push(serialize_caption(vocab, &counts));
    }
    Ok(Payload::new(PayloadBody::Captions(CaptionSet::unchecked(
        out,
    ))))
}

/// Caption decoder: one sketch per caption. Each counted object is realized
/// with probability `p_realize`, then every mentioned class count receives a
/// uniform integer jitter in `[-count_jitter, count_jitter]`, floored at 0.
pub fn decode_caption(
    payload: &Payload,
    vocab: &ClassVocabulary,
    noise: &CaptionNoise,
    seed: u64,
) -> Result<Vec<ReconstructionSketch>> {
    let PayloadBody::Captions(set) = payload.body() else {
        return Err(payload.mismatch(PayloadKind::Captions));
    };
    noise.validate()?;
    let jitter = i64::from(noise.count_jitter);
    set.captions()
        .iter()
        .enumerate()
        .map(|(n, caption)| {
            let items = parse_caption(caption, vocab).map_err(|e| e.in_caption(n))?;
            let mut rng = seed::rng_for(seed, &[Label::Str("generate"), Label::from(n)]);
            let counts = items.into_iter().map(|(class, count)| {
                let mut realized = (0..count)
                    .filter(|_| rng.random::<f64>() < noise.p_realize)
                    .count() as i64;
                if jitter > 0 {
                    realized += rng.random_range(-jitter..=jitter);
                }
                (vocab.name(class).to_owned(), realized.max(0) as u64)
            });
            Ok(ReconstructionSketch::from_counts(
                counts.collect::<Vec<_>>(),
                format!("caption:{n}"),
            ))
        })
        .collect()
}

/// Crop encoder: one crop per object, sized by its bounding box.
pub fn encode_crops(scene: &SceneImage) -> Payload {
    let crops = scene
        .objects
        .iter()
        .map(|o| ObjectCrop {
            class_name: o.class_name.clone(),
            w: o.bbox.w,
            h: o.bbox.h,
            pixel_bits: scene.pixel_bits,
        })
        .collect();
    Payload::new(PayloadBody::Crops(crops))
}

/// Crop decoder. The receiver uses the crops directly, so the sketch is the
/// class histogram of the crops.
pub fn decode_crops(payload: &Payload) -> Result<ReconstructionSketch> {
    let PayloadBody::Crops(crops) = payload.body() else {
        return Err(payload.mismatch(PayloadKind::Crops));
    };
    Ok(ReconstructionSketch::from_counts(
        crops.iter().map(|c| (c.class_name.clone(), 1)),
        "crops",
    ))
}

/// Raw baseline encoder: the whole image.
pub fn encode_raw(scene: &SceneImage) -> Payload {
    Payload::new(PayloadBody::Raw(scene.clone()))
}

/// Raw decoder: the exact ground-truth content.
pub fn decode_raw(payload: &Payload) -> Result<ReconstructionSketch> {
    let PayloadBody::Raw(scene) = payload.body() else {
        return Err(payload.mismatch(PayloadKind::Raw));
    };
    Ok(ReconstructionSketch::from_counts(
        scene.objects.iter().map(|o| (o.class_name.clone(), 1)),
        "raw",
    ))
}
