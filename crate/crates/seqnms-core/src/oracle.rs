//! Slow reference implementations for cross-checking the fast paths, plus a
//! seeded generator of small random clips to feed them.
//!
//! The reference sequence search literally enumerates every linked sequence,
//! so it is only usable on clips small enough to pass an up-front size guard.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::BBox;
use crate::model::{ClassId, ClipDetections, Detection};
use crate::seqnms::Sequence;

/// Upper bound on the estimated number of sequence prefixes the exhaustive
/// search is willing to visit.
pub const DEFAULT_SIZE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("exhaustive search would visit about {estimate} sequences, over the limit of {limit}")]
    SearchSpaceTooLarge { estimate: u64, limit: u64 },
}

// Counts candidate sequences as if every adjacent pair were linked: for each
// start frame, the product of (boxes + 1) over the remaining frames. Ignoring
// the actual links keeps the guard independent of the threshold and strictly
// pessimistic.
fn search_space_estimate(clip: &ClipDetections) -> u64 {
    let counts: Vec<u64> = clip
        .frames
        .iter()
        .map(|f| f.detections.len() as u64 + 1)
        .collect();
    let mut total: u64 = 0;
    for start in 0..counts.len() {
        let mut prod: u64 = 1;
        for &c in &counts[start..] {
            prod = prod.saturating_mul(c);
        }
        total = total.saturating_add(prod);
    }
    total
}

fn extend(
    clip: &ClipDetections,
    link_thresh: f64,
    start_frame: usize,
    path: &mut Vec<usize>,
    running_score: f64,
    best: &mut Option<(f64, usize, Vec<usize>)>,
) {
    if best.as_ref().is_none_or(|&(s, _, _)| running_score > s) {
        *best = Some((running_score, start_frame, path.clone()));
    }
    let end_frame = start_frame + path.len() - 1;
    if end_frame + 1 >= clip.num_frames() {
        return;
    }
    let last = clip.frames[end_frame].detections[*path.last().unwrap()].bbox;
    for (j, d) in clip.frames[end_frame + 1].detections.iter().enumerate() {
        if last.iou(&d.bbox) > link_thresh {
            path.push(j);
            extend(clip, link_thresh, start_frame, path, running_score + d.score, best);
            path.pop();
        }
    }
}

/// Finds the highest-total-score linked sequence of a single-class clip by
/// enumerating every sequence: each box starts one, and a sequence extends to
/// any next-frame box whose IoU with its last box strictly exceeds
/// `link_thresh`. Equal totals keep the sequence found first.
///
/// Returns `None` for a clip without detections, or
/// [`OracleError::SearchSpaceTooLarge`] when the a-priori estimate exceeds
/// [`DEFAULT_SIZE_LIMIT`].
pub fn brute_force_best_sequence(
    clip: &ClipDetections,
    link_thresh: f64,
) -> Result<Option<Sequence>, OracleError> {
    assert!(
        0.0 < link_thresh && link_thresh < 1.0,
        "link_thresh must be in (0, 1), got {link_thresh}"
    );
    let estimate = search_space_estimate(clip);
    if estimate > DEFAULT_SIZE_LIMIT {
        return Err(OracleError::SearchSpaceTooLarge {
            estimate,
            limit: DEFAULT_SIZE_LIMIT,
        });
    }
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut path = Vec::new();
    for start_frame in 0..clip.num_frames() {
        for (i, d) in clip.frames[start_frame].detections.iter().enumerate() {
            path.push(i);
            extend(clip, link_thresh, start_frame, &mut path, d.score, &mut best);
            path.pop();
        }
    }
    Ok(best.map(|(seq_score, start_frame, indices)| {
        let raw_scores: Vec<f64> = indices
            .iter()
            .zip(start_frame..)
            .map(|(&i, t)| clip.frames[t].detections[i].score)
            .collect();
        Sequence {
            start_frame,
            end_frame: start_frame + indices.len() - 1,
            rescored: raw_scores.clone(),
            raw_scores,
            indices,
            seq_score,
        }
    }))
}

/// Greedy NMS written as the definition reads: repeatedly keep the
/// highest-scoring remaining detection (lowest index on ties) and discard
/// every remaining detection whose IoU with it strictly exceeds `iou_thresh`.
/// Kept indices come back in selection order.
pub fn brute_force_nms(detections: &[Detection], iou_thresh: f64) -> Vec<usize> {
    assert!(
        0.0 < iou_thresh && iou_thresh < 1.0,
        "iou_thresh must be in (0, 1), got {iou_thresh}"
    );
    let mut remaining = vec![true; detections.len()];
    let mut kept = Vec::new();
    loop {
        let mut top: Option<usize> = None;
        for (i, d) in detections.iter().enumerate() {
            if remaining[i] && top.is_none_or(|b: usize| d.score > detections[b].score) {
                top = Some(i);
            }
        }
        let Some(pick) = top else { break };
        kept.push(pick);
        remaining[pick] = false;
        for (i, d) in detections.iter().enumerate() {
            if remaining[i] && detections[pick].bbox.iou(&d.bbox) > iou_thresh {
                remaining[i] = false;
            }
        }
    }
    kept
}

/// Generates a small single-class clip from a seed: frame count uniform in
/// `1..=max_frames`, per-frame box count uniform in `0..=max_boxes`, box
/// corners drawn on a 100x100 canvas, scores uniform in [0, 1). The same
/// seed always yields the same clip.
pub fn random_clip(seed: u64, max_frames: usize, max_boxes: usize) -> ClipDetections {
    assert!(max_frames >= 1, "max_frames must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_frames = rng.random_range(1..=max_frames);
    let mut frames = Vec::with_capacity(num_frames);
    for _ in 0..num_frames {
        let num_boxes = rng.random_range(0..=max_boxes);
        let mut detections = Vec::with_capacity(num_boxes);
        for _ in 0..num_boxes {
            let mut xs = [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
            let mut ys = [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            detections.push(Detection {
                bbox: BBox::new(xs[0], ys[0], xs[1], ys[1]).unwrap(),
                score: rng.random(),
                class: ClassId(0),
            });
        }
        frames.push(detections);
    }
    ClipDetections::from_frames(frames)
}
