//! Import of COCO-style instance annotations (`images`, `annotations`,
//! `categories`) into a native [`Dataset`].

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use crate::dataset::{schema_error, Dataset};
use crate::error::{Error, Result};
use crate::scene::{BBox, ClassVocabulary, ObjectInstance, SceneImage, DEFAULT_PIXEL_BITS};

#[derive(Debug, Deserialize)]
struct CocoDocument {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

#[derive(Debug, Deserialize)]
struct CocoImage {
    id: u64,
    width: u32,
    height: u32,
}

#[derive(Debug, Deserialize)]
struct CocoAnnotation {
    #[serde(default)]
    id: Option<u64>,
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
}

#[derive(Debug, Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

#[derive(Debug, Clone, Default)]
pub struct CocoImportOptions {
    /// Keep only the first `n` images by ascending id.
    pub max_images: Option<usize>,
    /// Restrict to these classes, in this order. Defaults to every category
    /// in ascending category id order.
    pub classes: Option<Vec<String>>,
    pub pixel_bits: Option<u32>,
}

/// Converts a floating-point `[x, y, w, h]` box to integer pixels.
///
/// The start is floored and the end `x + w` is ceiled, so the integer box
/// always covers the original; the result is then clamped into the image
/// and kept at least one pixel wide and tall.
pub fn pixel_bbox(bbox: [f64; 4], width: u32, height: u32) -> BBox {
    let [x, y, w, h] = bbox;
    let (x0, x1) = axis(x, w, width);
    let (y0, y1) = axis(y, h, height);
    BBox::new(x0, y0, x1 - x0, y1 - y0)
}

fn axis(start: f64, len: f64, limit: u32) -> (u32, u32) {
    let limit = f64::from(limit);
    let lo = start.floor().clamp(0.0, limit - 1.0);
    let hi = (start + len.max(0.0)).ceil().clamp(lo + 1.0, limit);
    (lo as u32, hi as u32)
}

pub fn import_coco_str(json: &str, opts: &CocoImportOptions) -> Result<Dataset> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let doc: CocoDocument = serde_path_to_error::deserialize(de).map_err(schema_error)?;

    let mut categories = BTreeMap::new();
    for (i, cat) in doc.categories.iter().enumerate() {
        if categories.insert(cat.id, cat.name.as_str()).is_some() {
            return Err(Error::Schema {
                path: format!("categories[{i}].id"),
                message: format!("duplicate category id {}", cat.id),
            });
        }
    }
    let vocabulary = match &opts.classes {
        Some(classes) => {
            for class in classes {
                if !categories.values().any(|n| n == class) {
                    return Err(Error::UnknownClass(class.clone()));
                }
            }
            ClassVocabulary::new(classes.iter().cloned())?
        }
        None => ClassVocabulary::new(categories.values().map(|s| s.to_string()))?,
    };

    let mut images: Vec<&CocoImage> = doc.images.iter().collect();
    images.sort_by_key(|img| img.id);
    for pair in images.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(Error::Schema {
                path: "images".into(),
                message: format!("duplicate image id {}", pair[0].id),
            });
        }
    }
    let all_ids: HashMap<u64, &CocoImage> = images.iter().map(|img| (img.id, *img)).collect();
    if let Some(n) = opts.max_images {
        images.truncate(n);
    }
    let kept: HashMap<u64, usize> = images
        .iter()
        .enumerate()
        .map(|(i, img)| (img.id, i))
        .collect();

    let mut per_image: Vec<Vec<(u64, ObjectInstance)>> = vec![Vec::new(); images.len()];
    for (i, ann) in doc.annotations.iter().enumerate() {
        let ann_id = ann.id.unwrap_or(i as u64);
        let name = *categories
            .get(&ann.category_id)
            .ok_or(Error::UnknownCategory {
                annotation: ann_id,
                category: ann.category_id,
            })?;
        let img = all_ids.get(&ann.image_id).ok_or(Error::UnknownImage {
            annotation: ann_id,
            image: ann.image_id,
        })?;
        if ann.bbox.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema {
                path: format!("annotations[{i}].bbox"),
                message: "bbox entries must be finite".into(),
            });
        }
        let Some(&slot) = kept.get(&ann.image_id) else {
            continue;
        };
        if !vocabulary.contains(name) || img.width == 0 || img.height == 0 {
            continue;
        }
        let bbox = pixel_bbox(ann.bbox, img.width, img.height);
        per_image[slot].push((ann_id, ObjectInstance::new(name, bbox)));
    }

    let pixel_bits = opts.pixel_bits.unwrap_or(DEFAULT_PIXEL_BITS);
    let scenes = images
        .iter()
        .zip(per_image)
        .map(|(img, mut objects)| {
            objects.sort_by_key(|(id, _)| *id);
            SceneImage::new(
                img.id.to_string(),
                img.width,
                img.height,
                pixel_bits,
                objects.into_iter().map(|(_, o)| o).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(vocabulary, scenes)
}

pub fn import_coco(instances: impl AsRef<Path>, opts: &CocoImportOptions) -> Result<Dataset> {
    let path = instances.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    import_coco_str(&text, opts)
}
