//! One-clip JSON files holding detections and, optionally, ground truth.
//!
//! The format is a single human-diffable document: a schema version, a clip
//! id, a class-label table, per-frame detection lists, and an optional
//! ground-truth section. Serialization is deterministic (fixed field order,
//! sorted label table, full-precision floats), so identical data always
//! produces identical bytes and round-trips exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::model::{
    validate, ClassId, ClipDetections, Detection, GroundTruthBox, GroundTruthClip,
};

pub const SCHEMA_VERSION: u32 = 1;

/// In-memory form of one clip file.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFile {
    pub clip_id: String,
    /// Optional display labels per class id; purely cosmetic.
    pub classes: BTreeMap<u32, String>,
    pub detections: ClipDetections,
    pub ground_truth: Option<GroundTruthClip>,
}

/// A clip loaded from disk together with any non-fatal warnings (currently
/// only out-of-range scores that were clamped into [0, 1]).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedClip {
    pub file: ClipFile,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ClipFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: malformed clip file at byte {offset}: {message}")]
    Malformed {
        path: String,
        offset: usize,
        message: String,
    },
    #[error("{path}: schema version {found}, but this build reads version {expected}")]
    SchemaVersion {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("{path}: invalid clip data: {}", messages.join("; "))]
    Validation { path: String, messages: Vec<String> },
}

#[derive(Serialize, Deserialize)]
struct ClipFileDto {
    schema_version: u32,
    clip_id: String,
    #[serde(default)]
    classes: BTreeMap<u32, String>,
    frames: Vec<FrameDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<Vec<GtBoxDto>>>,
}

#[derive(Serialize, Deserialize)]
struct FrameDto {
    detections: Vec<DetectionDto>,
}

#[derive(Serialize, Deserialize)]
struct DetectionDto {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    score: f64,
    class: u32,
}

#[derive(Serialize, Deserialize)]
struct GtBoxDto {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    class: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track_id: Option<u64>,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

/// Writes the clip as pretty-printed JSON.
pub fn save_clip(path: impl AsRef<Path>, clip: &ClipFile) -> Result<(), ClipFileError> {
    let path = path.as_ref();
    let dto = ClipFileDto {
        schema_version: SCHEMA_VERSION,
        clip_id: clip.clip_id.clone(),
        classes: clip.classes.clone(),
        frames: clip
            .detections
            .frames
            .iter()
            .map(|f| FrameDto {
                detections: f
                    .detections
                    .iter()
                    .map(|d| DetectionDto {
                        bbox: [d.bbox.x1(), d.bbox.y1(), d.bbox.x2(), d.bbox.y2()],
                        score: d.score,
                        class: d.class.0,
                    })
                    .collect(),
            })
            .collect(),
        ground_truth: clip.ground_truth.as_ref().map(|gt| {
            gt.frames
                .iter()
                .map(|frame| {
                    frame
                        .iter()
                        .map(|b| GtBoxDto {
                            bbox: [b.bbox.x1(), b.bbox.y1(), b.bbox.x2(), b.bbox.y2()],
                            class: b.class.0,
                            track_id: b.track_id,
                        })
                        .collect()
                })
                .collect()
        }),
    };
    let text = serde_json::to_string_pretty(&dto).expect("clip files always serialize");
    fs::write(path, text + "\n").map_err(|source| ClipFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (n, l) in text.lines().enumerate() {
        if n + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += l.len() + 1;
    }
    text.len()
}

fn box_from(
    corners: [f64; 4],
    location: &str,
    problems: &mut Vec<String>,
) -> Option<BBox> {
    match BBox::new(corners[0], corners[1], corners[2], corners[3]) {
        Ok(b) => Some(b),
        Err(e) => {
            problems.push(format!("{location}: {e}"));
            None
        }
    }
}

/// Reads, parses, and validates one clip file. Scores outside [0, 1] are
/// clamped with a warning; structural problems (bad syntax, wrong schema
/// version, invalid boxes or scores) are errors.
pub fn load_clip(path: impl AsRef<Path>) -> Result<LoadedClip, ClipFileError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ClipFileError::Io {
        path: display.clone(),
        source,
    })?;
    let malformed = |e: &serde_json::Error| ClipFileError::Malformed {
        path: display.clone(),
        offset: byte_offset(&text, e.line(), e.column()),
        message: e.to_string(),
    };
    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| malformed(&e))?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(ClipFileError::SchemaVersion {
            path: display,
            found: probe.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let dto: ClipFileDto = serde_json::from_str(&text).map_err(|e| malformed(&e))?;

    let mut problems = Vec::new();
    let mut warnings = Vec::new();
    let mut frames = Vec::with_capacity(dto.frames.len());
    for (t, frame) in dto.frames.iter().enumerate() {
        let mut detections = Vec::with_capacity(frame.detections.len());
        for (i, d) in frame.detections.iter().enumerate() {
            let location = format!("frame {t}, detection {i}");
            let Some(bbox) = box_from(d.bbox, &location, &mut problems) else {
                continue;
            };
            let mut score = d.score;
            if !score.is_finite() {
                problems.push(format!("{location}: score {score} is not a number"));
                continue;
            }
            if !(0.0..=1.0).contains(&score) {
                let clamped = score.clamp(0.0, 1.0);
                warnings.push(format!("{location}: score {score} clamped to {clamped}"));
                score = clamped;
            }
            detections.push(Detection {
                bbox,
                score,
                class: ClassId(d.class),
            });
        }
        frames.push(detections);
    }
    let detections = ClipDetections::from_frames(frames);

    let ground_truth = dto.ground_truth.map(|gt_frames| {
        if gt_frames.len() != detections.num_frames() {
            problems.push(format!(
                "ground truth has {} frames but detections have {}",
                gt_frames.len(),
                detections.num_frames()
            ));
        }
        let frames = gt_frames
            .iter()
            .enumerate()
            .map(|(t, frame)| {
                frame
                    .iter()
                    .enumerate()
                    .filter_map(|(g, b)| {
                        let location = format!("frame {t}, ground-truth box {g}");
                        box_from(b.bbox, &location, &mut problems).map(|bbox| GroundTruthBox {
                            bbox,
                            class: ClassId(b.class),
                            track_id: b.track_id,
                        })
                    })
                    .collect()
            })
            .collect();
        GroundTruthClip { frames }
    });

    for v in validate(&detections) {
        problems.push(v.to_string());
    }
    if !problems.is_empty() {
        return Err(ClipFileError::Validation {
            path: display,
            messages: problems,
        });
    }
    Ok(LoadedClip {
        file: ClipFile {
            clip_id: dto.clip_id,
            classes: dto.classes,
            detections,
            ground_truth,
        },
        warnings,
    })
}
