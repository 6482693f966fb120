//! Simulator for goal-oriented image transmission where the receiver's goal
//! is object detection.
//!
//! An image ([`scene::SceneImage`]) is encoded by a semantic codec
//! ([`codec`]), sent across a budgeted, possibly lossy link ([`channel`]),
//! decoded, and judged by a goal function ([`goal`]) that reduces both the
//! original and the reconstruction to per-class object counts. [`metrics`]
//! scores each image by semantic error, communication gain and their
//! product, the weighted error; [`selector`] picks the codec with the lowest
//! mean weighted error subject to minimum-gain and maximum-error
//! constraints. [`harness`] drives whole experiments.
//!
//! ```
//! use semcom_core::prelude::*;
//!
//! let vocab = ClassVocabulary::new(["person", "car", "dog"])?;
//! let truth = SemanticVector::from_counts(vec![3.0, 2.0, 1.0])?;
//! let seen = SemanticVector::from_counts(vec![3.0, 2.0, 0.0])?;
//! let e = semantic_error(&truth, &seen)?;
//! assert!((e - 1.0 / 14f64.sqrt()).abs() < 1e-12);
//! # assert_eq!(vocab.len(), 3);
//! # Ok::<(), semcom_core::Error>(())
//! ```

pub mod bridge;
pub mod channel;
pub mod coco;
pub mod codec;
pub mod dataset;
mod error;
pub mod goal;
pub mod harness;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod scene;
pub mod seed;
pub mod selector;
pub mod synth;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::channel::{
        transmit, BudgetComparison, BudgetPolicy, ChannelConfig, DeliveryResult,
    };
    pub use crate::codec::{
        decode_caption, decode_crops, decode_raw, encode_caption, encode_crops, encode_raw,
        CaptionNoise, CaptionSet, ObjectCrop, Payload, PayloadBody, PayloadKind,
        ReconstructionSketch,
    };
    pub use crate::dataset::Dataset;
    pub use crate::goal::{detect, detect_objects_list, DetectorModel, Evaluable, GoalEvaluator};
    pub use crate::harness::{run, run_algorithm1, run_algorithm2, RunConfig, RunReport};
    pub use crate::metrics::{
        check_constraints, cumulative_average, gain, semantic_error, weighted_error,
        ConstraintSpec, MetricRecord, Verdict,
    };
    pub use crate::pipeline::{evaluate_config, CodecConfig, EvaluationSummary, PipelineOptions};
    pub use crate::scene::{BBox, ClassVocabulary, ObjectInstance, SceneImage, SemanticVector};
    pub use crate::selector::{select, SelectionOutcome, SelectionReport};
    pub use crate::Error;
}

/// The guide's chapters, compiled as doctests so the book cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scenes.md")]
    mod scenes {}
    #[doc = include_str!("../../../book/src/goal.md")]
    mod goal {}
    #[doc = include_str!("../../../book/src/codecs.md")]
    mod codecs {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
