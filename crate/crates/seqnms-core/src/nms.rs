//! Greedy per-frame non-maximum suppression baseline.

use std::collections::BTreeMap;

use crate::model::{ClassId, ClipDetections, Detection};

/// Greedy NMS over one frame's detections of a single class.
///
/// Repeatedly keeps the highest-scoring remaining detection and discards every
/// remaining detection whose IoU with it strictly exceeds `iou_thresh`.
/// Returns kept indices in descending score order; score ties keep the lower
/// index first. Callers split multi-class frames by class before calling.
///
/// Panics when `iou_thresh` is not inside (0, 1).
pub fn nms_frame(detections: &[Detection], iou_thresh: f64) -> Vec<usize> {
    assert!(
        0.0 < iou_thresh && iou_thresh < 1.0,
        "iou_thresh must be in (0, 1), got {iou_thresh}"
    );
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then(a.cmp(&b))
    });
    let mut kept = Vec::new();
    let mut suppressed = vec![false; detections.len()];
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(i);
        for &j in &order[pos + 1..] {
            if !suppressed[j] && detections[i].bbox.iou(&detections[j].bbox) > iou_thresh {
                suppressed[j] = true;
            }
        }
    }
    kept
}

/// Per-frame, per-class greedy NMS over a whole clip.
///
/// The frame structure is preserved, kept detections stay in their original
/// within-frame order, and scores are never modified.
pub fn nms_clip(clip: &ClipDetections, iou_thresh: f64) -> ClipDetections {
    let mut frames = Vec::with_capacity(clip.frames.len());
    for frame in &clip.frames {
        let mut by_class: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
        for (i, det) in frame.detections.iter().enumerate() {
            by_class.entry(det.class).or_default().push(i);
        }
        let mut kept_indices = Vec::new();
        for indices in by_class.values() {
            let group: Vec<Detection> = indices.iter().map(|&i| frame.detections[i]).collect();
            for k in nms_frame(&group, iou_thresh) {
                kept_indices.push(indices[k]);
            }
        }
        kept_indices.sort_unstable();
        frames.push(kept_indices.iter().map(|&i| frame.detections[i]).collect());
    }
    ClipDetections::from_frames(frames)
}
