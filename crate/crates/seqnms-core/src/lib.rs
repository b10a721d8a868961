//! Video object detection post-processing that links per-frame detections
//! into cross-frame sequences, rescores them, and suppresses overlapping
//! boxes — together with the baseline per-frame suppression it improves on,
//! brute-force reference implementations, an evaluation harness, and a
//! synthetic clip generator for exercising all of it.

pub mod clipfile;
pub mod eval;
pub mod geometry;
pub mod model;
pub mod nms;
pub mod oracle;
pub mod seqnms;
pub mod synth;

pub use geometry::BBox;
pub use model::{
    ClassId, ClipDetections, Detection, FrameDetections, GroundTruthBox, GroundTruthClip,
};
pub use seqnms::{seq_nms, seq_nms_detailed, RescoreMode, SeqNmsConfig};
