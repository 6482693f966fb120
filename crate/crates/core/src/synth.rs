//! Seeded synthetic scene datasets.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scene::{BBox, ClassVocabulary, ObjectInstance, SceneImage, DEFAULT_PIXEL_BITS};
use crate::seed::{self, Label};

/// Where object boxes go.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layout {
    /// Independent boxes with sides drawn uniformly from `[min_side, max_side]`.
    Random { min_side: u32, max_side: u32 },
    /// Objects tile a left-hand strip covering `coverage` of the image area
    /// (the strip width is rounded to whole columns), as horizontal bands of
    /// random height. Total crop area is exactly the strip area.
    Strip { coverage: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub images: usize,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_pixel_bits")]
    pub pixel_bits: u32,
    pub classes: Vec<String>,
    pub min_objects: usize,
    pub max_objects: usize,
    pub layout: Layout,
}

fn default_pixel_bits() -> u32 {
    DEFAULT_PIXEL_BITS
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::param(
                "width/height",
                "image dimensions must be positive",
            ));
        }
        if self.min_objects > self.max_objects {
            return Err(Error::param("min_objects", "exceeds max_objects"));
        }
        match self.layout {
            Layout::Random { min_side, max_side } => {
                if min_side == 0 || min_side > max_side {
                    return Err(Error::param("layout", "need 1 <= min_side <= max_side"));
                }
            }
            Layout::Strip { coverage } => {
                if !(coverage > 0.0 && coverage <= 1.0) {
                    return Err(Error::param("layout", "coverage must lie in (0, 1]"));
                }
                if self.min_objects == 0 {
                    return Err(Error::param(
                        "min_objects",
                        "a strip layout needs at least one object",
                    ));
                }
                if self.max_objects > self.height as usize {
                    return Err(Error::param("max_objects", "more bands than pixel rows"));
                }
            }
        }
        Ok(())
    }
}

/// Generates a dataset; identical `(cfg, seed)` give identical output.
pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let vocab = ClassVocabulary::new(cfg.classes.iter().cloned())?;
    let width_digits = cfg.images.max(1).to_string().len();
    let images = (0..cfg.images)
        .map(|i| {
            let mut rng = seed::rng_for(seed, &[Label::Str("synth"), Label::from(i)]);
            let n = rng.random_range(cfg.min_objects..=cfg.max_objects);
            let boxes = match cfg.layout {
                Layout::Random { min_side, max_side } => (0..n)
                    .map(|_| random_box(&mut rng, cfg.width, cfg.height, min_side, max_side))
                    .collect(),
                Layout::Strip { coverage } => strip_boxes(&mut rng, cfg, coverage, n),
            };
            let objects = boxes
                .into_iter()
                .map(|b| {
                    let class = cfg
                        .classes
                        .choose(&mut rng)
                        .expect("vocabulary is non-empty");
                    ObjectInstance::new(class.clone(), b)
                })
                .collect();
            SceneImage::new(
                format!("synth-{i:0width_digits$}"),
                cfg.width,
                cfg.height,
                cfg.pixel_bits,
                objects,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(vocab, images)
}

fn random_box(rng: &mut impl Rng, width: u32, height: u32, min_side: u32, max_side: u32) -> BBox {
    let w = rng.random_range(min_side..=max_side).min(width);
    let h = rng.random_range(min_side..=max_side).min(height);
    let x = rng.random_range(0..=width - w);
    let y = rng.random_range(0..=height - h);
    BBox::new(x, y, w, h)
}

fn strip_boxes(rng: &mut impl Rng, cfg: &SynthConfig, coverage: f64, n: usize) -> Vec<BBox> {
    let strip = ((f64::from(cfg.width) * coverage).round() as u32).clamp(1, cfg.width);
    // n - 1 distinct cut rows in 1..height split the strip into n bands.
    let mut rows: Vec<u32> = (1..cfg.height).collect();
    let mut cuts: Vec<u32> = rows.partial_shuffle(rng, n.saturating_sub(1)).0.to_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut top = 0;
    for bottom in cuts.into_iter().chain(std::iter::once(cfg.height)) {
        out.push(BBox::new(0, top, strip, bottom - top));
        top = bottom;
    }
    out
}
