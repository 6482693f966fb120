//! Native scene dataset files.
//!
//! ```json
//! { "vocabulary": ["person", "car"],
//!   "images": [ { "id": "0001", "width": 64, "height": 64, "pixel_bits": 192,
//!                 "objects": [ { "class": "person", "bbox": [0, 0, 16, 16] } ] } ] }
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ClassVocabulary, SceneImage};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub vocabulary: ClassVocabulary,
    pub images: Vec<SceneImage>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    vocabulary: ClassVocabulary,
    images: Vec<SceneImage>,
}

impl Dataset {
    /// Validates every scene against `vocabulary` and rejects duplicate ids.
    pub fn new(vocabulary: ClassVocabulary, images: Vec<SceneImage>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(images.len());
        for (i, scene) in images.iter().enumerate() {
            if !seen.insert(scene.id.as_str()) {
                return Err(Error::Schema {
                    path: format!("images[{i}].id"),
                    message: format!("duplicate image id `{}`", scene.id),
                });
            }
            let violations = scene.validate(&vocabulary);
            if !violations.is_empty() {
                return Err(Error::InvalidScene {
                    id: scene.id.clone(),
                    violations,
                });
            }
        }
        Ok(Self { vocabulary, images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(json);
        let file: DatasetFile = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        Self::new(file.vocabulary, file.images)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serialization is infallible")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Re-validates the scenes against a different vocabulary.
    pub fn with_vocabulary(self, vocabulary: ClassVocabulary) -> Result<Self> {
        Self::new(vocabulary, self.images)
    }
}

pub(crate) fn schema_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    Error::Schema {
        path,
        message: e.into_inner().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "vocabulary": ["person", "car"],
        "images": [
            {"id": "a", "width": 64, "height": 48,
             "objects": [{"class": "person", "bbox": [0, 0, 10, 10]},
                         {"class": "car", "bbox": [10, 10, 20, 5]}]},
            {"id": "b", "width": 8, "height": 8, "pixel_bits": 24, "objects": []}
        ]
    }"#;

    #[test]
    fn parses_sample() {
        let d = Dataset::from_json_str(SAMPLE).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.images[0].pixel_bits, 192);
        assert_eq!(d.images[1].pixel_bits, 24);
        let truth = d.images[0].semantic_truth(&d.vocabulary).unwrap();
        assert_eq!(truth.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn round_trips() {
        let d = Dataset::from_json_str(SAMPLE).unwrap();
        assert_eq!(Dataset::from_json_str(&d.to_json_string()).unwrap(), d);
    }

    #[test]
    fn unknown_top_level_key_is_named() {
        let err = Dataset::from_json_str(r#"{"vocabulary": ["a"], "images": [], "extra": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn nested_errors_carry_a_path() {
        let err = Dataset::from_json_str(
            r#"{"vocabulary": ["a"], "images": [{"id": "x", "width": 4, "height": 4,
                "objects": [{"class": "a", "bbox": [0, 0, 1]}]}]}"#,
        )
        .unwrap_err();
        match err {
            Error::Schema { path, .. } => {
                assert!(path.starts_with("images[0].objects[0].bbox"), "{path}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_scenes_rejected() {
        let err = Dataset::from_json_str(
            r#"{"vocabulary": ["a"], "images": [{"id": "x", "width": 4, "height": 4,
                "objects": [{"class": "b", "bbox": [0, 0, 1, 1]}]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidScene { .. }));
        let err = Dataset::from_json_str(
            r#"{"vocabulary": ["a"], "images": [{"id": "x", "width": 4, "height": 4},
                                                  {"id": "x", "width": 4, "height": 4}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate image id"));
    }
}
