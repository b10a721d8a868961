//! Detection and ground-truth containers for video clips.

use std::fmt;

use crate::geometry::BBox;

/// Dense class identifier. Display labels, when present, live in the clip
/// file's class table and are indexed by this id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One scored box of one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    /// Confidence in `[0, 1]`.
    pub score: f64,
    pub class: ClassId,
}

/// All detections of one frame. `frame_index` equals the frame's position in
/// its clip, so `(frame_index, i)` addresses a detection for the clip's whole
/// lifetime.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub frame_index: usize,
    pub detections: Vec<Detection>,
}

/// Detections for a whole clip, one entry per frame in frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipDetections {
    pub frames: Vec<FrameDetections>,
}

impl ClipDetections {
    /// Wraps per-frame detection lists, assigning frame indices 0, 1, 2, ...
    pub fn from_frames(frames: Vec<Vec<Detection>>) -> Self {
        ClipDetections {
            frames: frames
                .into_iter()
                .enumerate()
                .map(|(frame_index, detections)| FrameDetections { frame_index, detections })
                .collect(),
        }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn total_detections(&self) -> usize {
        self.frames.iter().map(|f| f.detections.len()).sum()
    }

    /// Distinct classes present, in ascending id order.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut ids: Vec<ClassId> = self
            .frames
            .iter()
            .flat_map(|f| f.detections.iter().map(|d| d.class))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// One annotated object instance in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub bbox: BBox,
    pub class: ClassId,
    /// Identity of the object across frames, when known.
    pub track_id: Option<u64>,
}

/// Ground truth for a whole clip, one list per frame in frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthClip {
    pub frames: Vec<Vec<GroundTruthBox>>,
}

impl GroundTruthClip {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn total_boxes(&self) -> usize {
        self.frames.iter().map(|f| f.len()).sum()
    }
}

/// A broken clip invariant, located as precisely as possible.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Frame position, when the problem is tied to one.
    pub frame: Option<usize>,
    /// Frame-local detection index, when the problem is tied to one.
    pub detection: Option<usize>,
    pub message: String,
}

impl Violation {
    pub fn clip(message: impl Into<String>) -> Self {
        Violation { frame: None, detection: None, message: message.into() }
    }

    pub fn frame(frame: usize, message: impl Into<String>) -> Self {
        Violation { frame: Some(frame), detection: None, message: message.into() }
    }

    pub fn detection(frame: usize, detection: usize, message: impl Into<String>) -> Self {
        Violation { frame: Some(frame), detection: Some(detection), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.frame, self.detection) {
            (Some(t), Some(i)) => write!(f, "frame {t}, detection {i}: {}", self.message),
            (Some(t), None) => write!(f, "frame {t}: {}", self.message),
            _ => write!(f, "clip: {}", self.message),
        }
    }
}

/// Checks every clip invariant and returns all violations found; an empty
/// result means the clip is valid.
pub fn validate(clip: &ClipDetections) -> Vec<Violation> {
    let mut out = Vec::new();
    if clip.frames.is_empty() {
        out.push(Violation::clip("clip has no frames"));
    }
    for (t, frame) in clip.frames.iter().enumerate() {
        if frame.frame_index != t {
            out.push(Violation::frame(
                t,
                format!("frame_index {} does not match position {t}", frame.frame_index),
            ));
        }
        for (i, det) in frame.detections.iter().enumerate() {
            if !(0.0..=1.0).contains(&det.score) {
                out.push(Violation::detection(
                    t,
                    i,
                    format!("score {} outside [0, 1]", det.score),
                ));
            }
        }
    }
    out
}

/// Detections of a single class, plus the original index of each kept
/// detection so results can be mapped back to the source clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredClip {
    pub clip: ClipDetections,
    /// `source_indices[t][k]` is the index the k-th kept detection of frame
    /// `t` had in the source clip.
    pub source_indices: Vec<Vec<usize>>,
}

/// Splits out one class. The frame count is preserved, so frames without
/// that class come back empty.
pub fn filter_by_class(clip: &ClipDetections, class: ClassId) -> FilteredClip {
    let mut frames = Vec::with_capacity(clip.frames.len());
    let mut source_indices = Vec::with_capacity(clip.frames.len());
    for frame in &clip.frames {
        let mut kept = Vec::new();
        let mut sources = Vec::new();
        for (i, det) in frame.detections.iter().enumerate() {
            if det.class == class {
                kept.push(*det);
                sources.push(i);
            }
        }
        frames.push(kept);
        source_indices.push(sources);
    }
    FilteredClip { clip: ClipDetections::from_frames(frames), source_indices }
}
