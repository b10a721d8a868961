//! Per-class average precision and mAP over clips, with greedy IoU matching
//! of detections to ground truth.
//!
//! Matching is per frame and per class: detections claim ground-truth boxes
//! in descending score order, each ground-truth box at most once. A class's
//! detections are pooled across all clips into one ranked list before its
//! precision-recall curve is integrated (all points, with the precision
//! envelope), so AP depends only on the global ranking within the class.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{ClassId, ClipDetections, GroundTruthClip};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("detections have {detections} frames but ground truth has {ground_truth}")]
    FrameCountMismatch { detections: usize, ground_truth: usize },
    #[error("got {detections} detection clips but {ground_truth} ground-truth clips")]
    ClipCountMismatch { detections: usize, ground_truth: usize },
    #[error("reports cover different class sets and cannot be combined")]
    ClassSetMismatch,
    #[error("no reports to combine")]
    NoReports,
}

/// One detection with its matching outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedDetection {
    pub frame: usize,
    /// Index within the frame's detection list.
    pub index: usize,
    pub class: ClassId,
    pub score: f64,
    /// Index of the ground-truth box this detection claimed, if any.
    pub matched_gt: Option<usize>,
}

impl MatchedDetection {
    pub fn is_true_positive(&self) -> bool {
        self.matched_gt.is_some()
    }
}

/// Matching outcome for one clip: every detection labeled, and per-frame
/// flags saying which ground-truth boxes were claimed.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// All detections in (frame, index) order.
    pub detections: Vec<MatchedDetection>,
    /// `gt_matched[t][g]` is true when ground-truth box `g` of frame `t` was
    /// claimed by some detection.
    pub gt_matched: Vec<Vec<bool>>,
}

fn assert_match_iou(match_iou: f64) {
    assert!(
        0.0 < match_iou && match_iou <= 1.0,
        "match_iou must be in (0, 1], got {match_iou}"
    );
}

/// Labels each detection TP or FP against the ground truth of its own frame
/// and class. Within a frame and class, detections are processed in
/// descending score order (ties by lower index) and each greedily claims the
/// still-unclaimed ground-truth box of highest IoU, provided that IoU is at
/// least `match_iou`; IoU ties go to the lowest ground-truth index.
pub fn match_detections(
    dets: &ClipDetections,
    gt: &GroundTruthClip,
    match_iou: f64,
) -> Result<MatchResult, EvalError> {
    assert_match_iou(match_iou);
    if dets.num_frames() != gt.num_frames() {
        return Err(EvalError::FrameCountMismatch {
            detections: dets.num_frames(),
            ground_truth: gt.num_frames(),
        });
    }
    let mut detections = Vec::with_capacity(dets.total_detections());
    let mut gt_matched: Vec<Vec<bool>> = gt.frames.iter().map(|f| vec![false; f.len()]).collect();
    for (t, frame) in dets.frames.iter().enumerate() {
        let mut order: Vec<usize> = (0..frame.detections.len()).collect();
        order.sort_by(|&a, &b| {
            frame.detections[b]
                .score
                .total_cmp(&frame.detections[a].score)
                .then(a.cmp(&b))
        });
        let mut matched_gt = vec![None; frame.detections.len()];
        for i in order {
            let d = &frame.detections[i];
            let mut best: Option<(f64, usize)> = None;
            for (g, gt_box) in gt.frames[t].iter().enumerate() {
                if gt_box.class != d.class || gt_matched[t][g] {
                    continue;
                }
                let v = d.bbox.iou(&gt_box.bbox);
                if v >= match_iou && best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, g));
                }
            }
            if let Some((_, g)) = best {
                gt_matched[t][g] = true;
                matched_gt[i] = Some(g);
            }
        }
        for (i, d) in frame.detections.iter().enumerate() {
            detections.push(MatchedDetection {
                frame: t,
                index: i,
                class: d.class,
                score: d.score,
                matched_gt: matched_gt[i],
            });
        }
    }
    Ok(MatchResult { detections, gt_matched })
}

/// Area under the precision-recall curve for one class, from `(score, is_tp)`
/// rows and the number of ground-truth instances.
///
/// Rows are ranked by descending score (equal scores keep their given order);
/// precision is replaced by its running maximum from the right before
/// integrating, and every true positive contributes its enveloped precision
/// times `1 / num_gt`. Returns `None` when `num_gt` is zero, since recall is
/// undefined there.
pub fn average_precision(rows: &[(f64, bool)], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].0.total_cmp(&rows[a].0));
    let mut precision = Vec::with_capacity(rows.len());
    let mut tp = 0usize;
    for (rank, &i) in order.iter().enumerate() {
        if rows[i].1 {
            tp += 1;
        }
        precision.push(tp as f64 / (rank + 1) as f64);
    }
    let mut ap = 0.0;
    let mut envelope = 0.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        envelope = envelope.max(precision[rank]);
        if rows[i].1 {
            ap += envelope;
        }
    }
    Some(ap / num_gt as f64)
}

/// Per-class APs and their mean for one post-processing method.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// AP for every class with at least one ground-truth instance.
    pub per_class_ap: BTreeMap<ClassId, f64>,
    /// Mean of `per_class_ap`, or 0.0 when no class has ground truth.
    pub map: f64,
    pub method_name: String,
}

impl EvalReport {
    pub fn new(per_class_ap: BTreeMap<ClassId, f64>, method_name: impl Into<String>) -> EvalReport {
        let map = if per_class_ap.is_empty() {
            0.0
        } else {
            let mut sum = 0.0;
            for ap in per_class_ap.values() {
                sum += ap;
            }
            sum / per_class_ap.len() as f64
        };
        EvalReport {
            per_class_ap,
            map,
            method_name: method_name.into(),
        }
    }

    fn class_set(&self) -> BTreeSet<ClassId> {
        self.per_class_ap.keys().copied().collect()
    }
}

/// Evaluates one method's outputs against ground truth over a whole dataset.
/// Detections of each class are pooled across all clips into a single ranked
/// list, VOC style. Classes without any ground-truth instance are excluded.
/// The report's `method_name` is left empty for the caller to fill in.
pub fn evaluate(
    dets: &[ClipDetections],
    gts: &[GroundTruthClip],
    match_iou: f64,
) -> Result<EvalReport, EvalError> {
    if dets.len() != gts.len() {
        return Err(EvalError::ClipCountMismatch {
            detections: dets.len(),
            ground_truth: gts.len(),
        });
    }
    let mut rows: BTreeMap<ClassId, Vec<(f64, bool)>> = BTreeMap::new();
    let mut num_gt: BTreeMap<ClassId, usize> = BTreeMap::new();
    for (det_clip, gt_clip) in dets.iter().zip(gts) {
        let result = match_detections(det_clip, gt_clip, match_iou)?;
        for m in result.detections {
            rows.entry(m.class).or_default().push((m.score, m.is_true_positive()));
        }
        for frame in &gt_clip.frames {
            for b in frame {
                *num_gt.entry(b.class).or_insert(0) += 1;
            }
        }
    }
    let mut per_class_ap = BTreeMap::new();
    for (&class, &n) in &num_gt {
        let class_rows = rows.get(&class).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(ap) = average_precision(class_rows, n) {
            per_class_ap.insert(class, ap);
        }
    }
    Ok(EvalReport::new(per_class_ap, ""))
}

/// Upper envelope over several reports: for every class, the best AP any of
/// them achieved, averaged into a combined mAP. This is an oracle-style
/// combination computed after the fact on the same data — not a method that
/// could run on its own. All reports must cover the same class set.
pub fn per_class_best(reports: &[EvalReport]) -> Result<EvalReport, EvalError> {
    let first = reports.first().ok_or(EvalError::NoReports)?;
    let classes = first.class_set();
    if reports.iter().any(|r| r.class_set() != classes) {
        return Err(EvalError::ClassSetMismatch);
    }
    let mut per_class_ap = BTreeMap::new();
    for class in classes {
        let best = reports
            .iter()
            .map(|r| r.per_class_ap[&class])
            .fold(f64::NEG_INFINITY, f64::max);
        per_class_ap.insert(class, best);
    }
    Ok(EvalReport::new(per_class_ap, "best"))
}

/// Fraction of ground-truth boxes covered by at least one proposal with IoU
/// at least `match_iou`, ignoring classes entirely. A clip without any
/// ground-truth box counts as fully covered.
pub fn proposal_recall(proposals: &ClipDetections, gt: &GroundTruthClip, match_iou: f64) -> f64 {
    assert_match_iou(match_iou);
    assert_eq!(
        proposals.num_frames(),
        gt.num_frames(),
        "proposals and ground truth must have the same frame count"
    );
    let total = gt.total_boxes();
    if total == 0 {
        return 1.0;
    }
    let mut covered = 0usize;
    for (frame, gt_frame) in proposals.frames.iter().zip(&gt.frames) {
        for gt_box in gt_frame {
            let hit = frame
                .detections
                .iter()
                .any(|d| d.bbox.iou(&gt_box.bbox) >= match_iou);
            if hit {
                covered += 1;
            }
        }
    }
    covered as f64 / total as f64
}

/// Renders one report as `class,ap` CSV, classes in ascending id order.
pub fn report_csv(report: &EvalReport) -> String {
    let mut out = String::from("class,ap\n");
    for (class, ap) in &report.per_class_ap {
        out.push_str(&format!("{class},{ap}\n"));
    }
    out
}

/// Renders the four-method per-class comparison as CSV with the fixed column
/// order `class,ap_nms,ap_avg,ap_max,ap_best,delta_avg_minus_nms`.
pub fn comparison_csv(
    nms: &EvalReport,
    avg: &EvalReport,
    max: &EvalReport,
    best: &EvalReport,
) -> Result<String, EvalError> {
    let classes = nms.class_set();
    for r in [avg, max, best] {
        if r.class_set() != classes {
            return Err(EvalError::ClassSetMismatch);
        }
    }
    let mut out = String::from("class,ap_nms,ap_avg,ap_max,ap_best,delta_avg_minus_nms\n");
    for class in classes {
        let (n, a, m, b) = (
            nms.per_class_ap[&class],
            avg.per_class_ap[&class],
            max.per_class_ap[&class],
            best.per_class_ap[&class],
        );
        out.push_str(&format!("{class},{n},{a},{m},{b},{}\n", a - n));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::model::{Detection, GroundTruthBox};

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn det(b: BBox, score: f64, class: u32) -> Detection {
        Detection { bbox: b, score, class: ClassId(class) }
    }

    fn gt(b: BBox, class: u32) -> GroundTruthBox {
        GroundTruthBox { bbox: b, class: ClassId(class), track_id: None }
    }

    fn one_frame(dets: Vec<Detection>, gts: Vec<GroundTruthBox>) -> (ClipDetections, GroundTruthClip) {
        (
            ClipDetections::from_frames(vec![dets]),
            GroundTruthClip { frames: vec![gts] },
        )
    }

    #[test]
    fn exact_hit_is_a_true_positive() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let (dets, truth) = one_frame(vec![det(b, 0.9, 0)], vec![gt(b, 0)]);
        let result = match_detections(&dets, &truth, 0.5).unwrap();
        assert_eq!(result.detections[0].matched_gt, Some(0));
        assert_eq!(result.gt_matched, vec![vec![true]]);
    }

    #[test]
    fn each_ground_truth_box_is_claimable_once() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let (dets, truth) = one_frame(vec![det(b, 0.9, 0), det(b, 0.8, 0)], vec![gt(b, 0)]);
        let result = match_detections(&dets, &truth, 0.5).unwrap();
        assert!(result.detections[0].is_true_positive());
        assert!(!result.detections[1].is_true_positive());
    }

    #[test]
    fn low_overlap_is_a_false_positive() {
        // IoU 4/16 = 0.25 < 0.5.
        let (dets, truth) = one_frame(
            vec![det(bx(0.0, 0.0, 10.0, 10.0), 0.9, 0)],
            vec![gt(bx(6.0, 6.0, 16.0, 16.0), 0)],
        );
        let result = match_detections(&dets, &truth, 0.5).unwrap();
        assert!(!result.detections[0].is_true_positive());
    }

    #[test]
    fn matching_respects_class() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let (dets, truth) = one_frame(vec![det(b, 0.9, 1)], vec![gt(b, 0)]);
        let result = match_detections(&dets, &truth, 0.5).unwrap();
        assert!(!result.detections[0].is_true_positive());
    }

    #[test]
    fn detection_claims_the_highest_iou_ground_truth() {
        let near = bx(0.0, 0.0, 10.0, 11.0); // IoU 10/11 with the detection
        let far = bx(0.0, 0.0, 10.0, 18.0); // IoU 10/18
        let (dets, truth) = one_frame(
            vec![det(bx(0.0, 0.0, 10.0, 10.0), 0.9, 0)],
            vec![gt(far, 0), gt(near, 0)],
        );
        let result = match_detections(&dets, &truth, 0.5).unwrap();
        assert_eq!(result.detections[0].matched_gt, Some(1));
    }

    #[test]
    fn iou_tie_goes_to_the_lowest_ground_truth_index() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let (dets, truth) = one_frame(vec![det(b, 0.9, 0)], vec![gt(b, 0), gt(b, 0)]);
        let result = match_detections(&dets, &truth, 0.5).unwrap();
        assert_eq!(result.detections[0].matched_gt, Some(0));
    }

    #[test]
    fn frame_count_mismatch_is_an_error() {
        let dets = ClipDetections::from_frames(vec![vec![], vec![]]);
        let truth = GroundTruthClip { frames: vec![vec![]] };
        assert_eq!(
            match_detections(&dets, &truth, 0.5),
            Err(EvalError::FrameCountMismatch { detections: 2, ground_truth: 1 })
        );
    }

    #[test]
    fn ap_of_tp_fp_tp_over_two_truths() {
        let rows = [(0.9, true), (0.8, false), (0.7, true)];
        let ap = average_precision(&rows, 2).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn ap_boundary_values_are_exact() {
        assert_eq!(average_precision(&[(0.9, true), (0.8, true)], 2), Some(1.0));
        assert_eq!(average_precision(&[], 3), Some(0.0));
        assert_eq!(average_precision(&[(0.9, false)], 1), Some(0.0));
        assert_eq!(average_precision(&[], 0), None);
    }

    #[test]
    fn envelope_carries_later_precision_backwards() {
        // A leading FP is integrated at the precision of the later TP.
        assert_eq!(average_precision(&[(0.9, false), (0.8, true)], 1), Some(0.5));
        assert_eq!(average_precision(&[(0.9, true), (0.8, false)], 1), Some(1.0));
    }

    #[test]
    fn equal_scores_keep_their_given_order() {
        let ap = average_precision(&[(0.5, false), (0.5, true)], 1).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn perfect_detections_give_map_one() {
        let b0 = bx(0.0, 0.0, 10.0, 10.0);
        let b1 = bx(30.0, 30.0, 50.0, 50.0);
        let (dets, truth) = one_frame(
            vec![det(b0, 1.0, 0), det(b1, 1.0, 1)],
            vec![gt(b0, 0), gt(b1, 1)],
        );
        let report = evaluate(&[dets], &[truth], 0.5).unwrap();
        assert_eq!(report.map, 1.0);
        assert_eq!(report.per_class_ap.len(), 2);
    }

    #[test]
    fn no_detections_give_map_zero() {
        let (_, truth) = one_frame(vec![], vec![gt(bx(0.0, 0.0, 10.0, 10.0), 0)]);
        let dets = ClipDetections::from_frames(vec![vec![]]);
        let report = evaluate(&[dets], &[truth], 0.5).unwrap();
        assert_eq!(report.map, 0.0);
        assert_eq!(report.per_class_ap[&ClassId(0)], 0.0);
    }

    #[test]
    fn map_is_the_mean_over_classes_with_ground_truth() {
        let b0 = bx(0.0, 0.0, 10.0, 10.0);
        let b1 = bx(30.0, 30.0, 50.0, 50.0);
        let off = bx(100.0, 100.0, 110.0, 110.0);
        // Class 0 perfect; class 1 one TP and one FP ranked above it.
        let (dets, truth) = one_frame(
            vec![det(b0, 1.0, 0), det(off, 0.9, 1), det(b1, 0.8, 1)],
            vec![gt(b0, 0), gt(b1, 1)],
        );
        let report = evaluate(&[dets], &[truth], 0.5).unwrap();
        assert_eq!(report.per_class_ap[&ClassId(0)], 1.0);
        assert_eq!(report.per_class_ap[&ClassId(1)], 0.5);
        assert_eq!(report.map, 0.75);
    }

    #[test]
    fn detections_pool_across_clips() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let off = bx(100.0, 100.0, 110.0, 110.0);
        // Clip 1 contributes an FP scoring above clip 0's TP.
        let (d0, t0) = one_frame(vec![det(b, 0.8, 0)], vec![gt(b, 0)]);
        let (d1, t1) = one_frame(vec![det(off, 0.9, 0)], vec![gt(b, 0)]);
        let report = evaluate(&[d0, d1], &[t0, t1], 0.5).unwrap();
        // Rows by score: FP 0.9, TP 0.8 → precision 1/2 at recall 1/2.
        assert_eq!(report.per_class_ap[&ClassId(0)], 0.25);
    }

    #[test]
    fn clip_count_mismatch_is_an_error() {
        assert_eq!(
            evaluate(&[], &[GroundTruthClip { frames: vec![] }], 0.5),
            Err(EvalError::ClipCountMismatch { detections: 0, ground_truth: 1 })
        );
    }

    fn report(aps: &[(u32, f64)]) -> EvalReport {
        EvalReport::new(
            aps.iter().map(|&(c, ap)| (ClassId(c), ap)).collect(),
            "test",
        )
    }

    #[test]
    fn per_class_best_takes_the_max_per_class() {
        let best = per_class_best(&[
            report(&[(0, 0.3), (1, 0.9)]),
            report(&[(0, 0.5), (1, 0.1)]),
            report(&[(0, 0.4), (1, 0.2)]),
        ])
        .unwrap();
        assert_eq!(best.per_class_ap[&ClassId(0)], 0.5);
        assert_eq!(best.per_class_ap[&ClassId(1)], 0.9);
        assert!((best.map - 0.7).abs() < 1e-12);
        assert_eq!(best.method_name, "best");
    }

    #[test]
    fn per_class_best_of_one_report_is_that_report() {
        let r = report(&[(0, 0.3), (1, 0.9)]);
        let best = per_class_best(std::slice::from_ref(&r)).unwrap();
        assert_eq!(best.per_class_ap, r.per_class_ap);
        assert_eq!(best.map, r.map);
    }

    #[test]
    fn per_class_best_rejects_mismatched_class_sets() {
        let result = per_class_best(&[report(&[(0, 0.3)]), report(&[(1, 0.9)])]);
        assert_eq!(result, Err(EvalError::ClassSetMismatch));
        assert_eq!(per_class_best(&[]), Err(EvalError::NoReports));
    }

    #[test]
    fn recall_counts_covered_ground_truth() {
        let b0 = bx(0.0, 0.0, 10.0, 10.0);
        let b1 = bx(30.0, 30.0, 50.0, 50.0);
        let (props, truth) = one_frame(vec![det(b0, 0.5, 7)], vec![gt(b0, 0), gt(b1, 0)]);
        // Class-agnostic: the class-7 proposal still covers the class-0 box.
        assert_eq!(proposal_recall(&props, &truth, 0.5), 0.5);
        let (all, truth2) = one_frame(vec![det(b0, 0.5, 0), det(b1, 0.5, 0)], vec![gt(b0, 0), gt(b1, 0)]);
        assert_eq!(proposal_recall(&all, &truth2, 0.5), 1.0);
        let (none, truth3) = one_frame(vec![], vec![gt(b0, 0)]);
        assert_eq!(proposal_recall(&none, &truth3, 0.5), 0.0);
    }

    #[test]
    fn csv_layouts_are_fixed() {
        let r = report(&[(0, 0.5), (1, 1.0)]);
        assert_eq!(report_csv(&r), "class,ap\n0,0.5\n1,1\n");
        let nms = report(&[(0, 0.5)]);
        let avg = report(&[(0, 0.75)]);
        let max = report(&[(0, 0.625)]);
        let best = report(&[(0, 0.75)]);
        let csv = comparison_csv(&nms, &avg, &max, &best).unwrap();
        assert_eq!(
            csv,
            "class,ap_nms,ap_avg,ap_max,ap_best,delta_avg_minus_nms\n0,0.5,0.75,0.625,0.75,0.25\n"
        );
        let other = report(&[(1, 0.5)]);
        assert_eq!(
            comparison_csv(&nms, &avg, &max, &other),
            Err(EvalError::ClassSetMismatch)
        );
    }
}
