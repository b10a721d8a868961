//! Sequence-level non-maximum suppression across video frames.
//!
//! Detections in adjacent frames are linked when their IoU strictly exceeds a
//! link threshold. The linked sequence with the highest total score is found
//! by dynamic programming, its scores are rewritten (mean or max), its boxes
//! are removed together with same-class boxes they overlap in their frame
//! span, and the loop repeats until no detections remain. Raw scores drive
//! every selection round; rescoring only affects the output.

use crate::geometry::BBox;
use crate::model::{filter_by_class, ClassId, ClipDetections, Detection};

/// How the scores of a selected sequence are rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescoreMode {
    /// Every box in the sequence gets the mean of the raw sequence scores.
    Average,
    /// Every box in the sequence gets the maximum of the raw sequence scores.
    Max,
}

/// Thresholds and rescoring mode for [`seq_nms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqNmsConfig {
    /// Adjacent-frame boxes link when their IoU strictly exceeds this.
    /// Must be inside (0, 1).
    pub link_thresh: f64,
    /// Boxes overlapping a selected sequence beyond this are dropped.
    /// Must be inside (0, 1).
    pub suppress_thresh: f64,
    pub rescore: RescoreMode,
}

impl Default for SeqNmsConfig {
    fn default() -> Self {
        SeqNmsConfig {
            link_thresh: 0.5,
            suppress_thresh: 0.3,
            rescore: RescoreMode::Average,
        }
    }
}

impl SeqNmsConfig {
    fn assert_valid(&self) {
        assert!(
            0.0 < self.link_thresh && self.link_thresh < 1.0,
            "link_thresh must be in (0, 1), got {}",
            self.link_thresh
        );
        assert!(
            0.0 < self.suppress_thresh && self.suppress_thresh < 1.0,
            "suppress_thresh must be in (0, 1), got {}",
            self.suppress_thresh
        );
    }
}

/// Links between detections of adjacent frames of a single-class clip.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    num_frames: usize,
    /// `links[t]` holds `(i, j)` pairs: box `i` of frame `t` linked to box
    /// `j` of frame `t + 1`, in lexicographic order.
    links: Vec<Vec<(usize, usize)>>,
}

impl LinkGraph {
    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    /// Edges between frame `t` and frame `t + 1`.
    pub fn between(&self, t: usize) -> &[(usize, usize)] {
        &self.links[t]
    }

    pub fn num_links(&self) -> usize {
        self.links.iter().map(|l| l.len()).sum()
    }
}

/// Builds the adjacent-frame link graph for a single-class clip: an edge
/// `(i, j)` means box `i` of frame `t` and box `j` of frame `t + 1` have
/// IoU strictly greater than `link_thresh`.
///
/// Panics when `link_thresh` is not inside (0, 1).
pub fn build_links(clip: &ClipDetections, link_thresh: f64) -> LinkGraph {
    assert!(
        0.0 < link_thresh && link_thresh < 1.0,
        "link_thresh must be in (0, 1), got {link_thresh}"
    );
    debug_assert!(
        clip.classes().len() <= 1,
        "build_links expects a single-class clip"
    );
    let num_frames = clip.num_frames();
    let mut links = Vec::with_capacity(num_frames.saturating_sub(1));
    for t in 1..num_frames {
        let prev = &clip.frames[t - 1].detections;
        let next = &clip.frames[t].detections;
        let mut edges = Vec::new();
        for (i, a) in prev.iter().enumerate() {
            for (j, b) in next.iter().enumerate() {
                if a.bbox.iou(&b.bbox) > link_thresh {
                    edges.push((i, j));
                }
            }
        }
        links.push(edges);
    }
    LinkGraph { num_frames, links }
}

/// A selected box sequence: one box per frame over a contiguous frame span.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    /// First frame covered, inclusive.
    pub start_frame: usize,
    /// Last frame covered, inclusive.
    pub end_frame: usize,
    /// Frame-local box index for every frame in `start_frame..=end_frame`,
    /// relative to the clip the sequence was selected from.
    pub indices: Vec<usize>,
    /// Scores the boxes carried when the sequence was selected.
    pub raw_scores: Vec<f64>,
    /// Scores after rescoring; equals `raw_scores` until [`rescore`] runs.
    pub rescored: Vec<f64>,
    /// Sum of `raw_scores`.
    pub seq_score: f64,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Frames covered by the sequence, paired with the box index in each.
    pub fn frame_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.start_frame..=self.end_frame).zip(self.indices.iter().copied())
    }
}

// Dynamic-programming state for one single-class clip. `best[t][i]` is the
// highest total score of any linked sequence ending at box (t, i), restricted
// to boxes still alive; dead boxes hold -inf so links through them are never
// taken. `frame_best` caches each frame's top cell.
struct Engine {
    boxes: Vec<Vec<BBox>>,
    scores: Vec<Vec<f64>>,
    // preds[t][i]: box indices of frame t - 1 linked to box (t, i), ascending.
    preds: Vec<Vec<Vec<usize>>>,
    alive: Vec<Vec<bool>>,
    best: Vec<Vec<f64>>,
    parent: Vec<Vec<Option<usize>>>,
    frame_best: Vec<Option<(f64, usize)>>,
}

impl Engine {
    fn new(clip: &ClipDetections, graph: &LinkGraph) -> Engine {
        assert_eq!(graph.num_frames(), clip.num_frames());
        let num_frames = clip.num_frames();
        let boxes: Vec<Vec<BBox>> = clip
            .frames
            .iter()
            .map(|f| f.detections.iter().map(|d| d.bbox).collect())
            .collect();
        let scores: Vec<Vec<f64>> = clip
            .frames
            .iter()
            .map(|f| f.detections.iter().map(|d| d.score).collect())
            .collect();
        let mut preds: Vec<Vec<Vec<usize>>> =
            scores.iter().map(|s| vec![Vec::new(); s.len()]).collect();
        for t in 1..num_frames {
            for &(i, j) in graph.between(t - 1) {
                preds[t][j].push(i);
            }
        }
        let mut engine = Engine {
            alive: scores.iter().map(|s| vec![true; s.len()]).collect(),
            best: scores.iter().map(|s| vec![0.0; s.len()]).collect(),
            parent: scores.iter().map(|s| vec![None; s.len()]).collect(),
            frame_best: vec![None; num_frames],
            boxes,
            scores,
            preds,
        };
        for t in 0..num_frames {
            for i in 0..engine.scores[t].len() {
                let (value, parent) = engine.cell(t, i);
                engine.best[t][i] = value;
                engine.parent[t][i] = parent;
            }
            engine.refresh_frame_best(t);
        }
        engine
    }

    // Recurrence: score of (t, i) plus the best live predecessor chain, or
    // the score alone when no predecessor improves on an empty chain. Among
    // equal predecessors the smallest index wins.
    fn cell(&self, t: usize, i: usize) -> (f64, Option<usize>) {
        let mut acc = 0.0;
        let mut parent = None;
        if t > 0 {
            for &j in &self.preds[t][i] {
                if self.best[t - 1][j] > acc {
                    acc = self.best[t - 1][j];
                    parent = Some(j);
                }
            }
        }
        (self.scores[t][i] + acc, parent)
    }

    fn refresh_frame_best(&mut self, t: usize) {
        let mut top: Option<(f64, usize)> = None;
        for i in 0..self.scores[t].len() {
            if !self.alive[t][i] {
                continue;
            }
            let v = self.best[t][i];
            if top.is_none_or(|(b, _)| v > b) {
                top = Some((v, i));
            }
        }
        self.frame_best[t] = top;
    }

    // Highest cell over the whole clip; earliest frame wins ties, then the
    // smallest index (refresh_frame_best already picked the smallest).
    fn global_best(&self) -> Option<(usize, usize)> {
        let mut out: Option<(f64, usize, usize)> = None;
        for (t, fb) in self.frame_best.iter().enumerate() {
            if let Some((v, i)) = *fb {
                if out.is_none_or(|(b, _, _)| v > b) {
                    out = Some((v, t, i));
                }
            }
        }
        out.map(|(_, t, i)| (t, i))
    }

    fn backtrack(&self, end_frame: usize, end_index: usize) -> Sequence {
        let mut rev_indices = vec![end_index];
        let mut t = end_frame;
        let mut i = end_index;
        while let Some(j) = self.parent[t][i] {
            t -= 1;
            i = j;
            rev_indices.push(i);
        }
        rev_indices.reverse();
        let indices = rev_indices;
        let start_frame = t;
        let raw_scores: Vec<f64> = indices
            .iter()
            .zip(start_frame..)
            .map(|(&i, t)| self.scores[t][i])
            .collect();
        let mut seq_score = 0.0;
        for s in &raw_scores {
            seq_score += s;
        }
        debug_assert_eq!(seq_score, self.best[end_frame][end_index]);
        Sequence {
            start_frame,
            end_frame,
            rescored: raw_scores.clone(),
            raw_scores,
            indices,
            seq_score,
        }
    }

    // Removes the sequence's boxes plus everything they suppress, then
    // repairs the DP forward from the first touched frame. A frame needs
    // recomputing only while the previous frame lost boxes or changed values,
    // and no frame past end_frame loses boxes, so the sweep stops as soon as
    // a frame beyond the span comes through unchanged.
    fn suppress(&mut self, seq: &Sequence, suppress_thresh: f64) {
        for (t, si) in seq.frame_indices() {
            let sbox = self.boxes[t][si];
            for i in 0..self.boxes[t].len() {
                if !self.alive[t][i] {
                    continue;
                }
                if i == si || sbox.iou(&self.boxes[t][i]) > suppress_thresh {
                    self.alive[t][i] = false;
                    self.best[t][i] = f64::NEG_INFINITY;
                }
            }
        }
        self.refresh_frame_best(seq.start_frame);
        let mut prev_dirty = true;
        for t in seq.start_frame + 1..self.frame_best.len() {
            let lost_boxes = t <= seq.end_frame;
            let mut changed = false;
            if prev_dirty {
                for i in 0..self.scores[t].len() {
                    if !self.alive[t][i] {
                        continue;
                    }
                    let (value, parent) = self.cell(t, i);
                    if value != self.best[t][i] {
                        changed = true;
                    }
                    self.best[t][i] = value;
                    self.parent[t][i] = parent;
                }
            }
            if changed || lost_boxes {
                self.refresh_frame_best(t);
            }
            prev_dirty = changed || lost_boxes;
            if t >= seq.end_frame && !prev_dirty {
                break;
            }
        }
    }
}

/// Runs the selection dynamic program once over a single-class clip and
/// returns the sequence with the highest total raw score, or `None` when the
/// clip holds no detections.
///
/// Ties prefer the earliest end frame, then the smallest box index at every
/// step walking backwards.
pub fn select_best_sequence(clip: &ClipDetections, graph: &LinkGraph) -> Option<Sequence> {
    let engine = Engine::new(clip, graph);
    engine.global_best().map(|(t, i)| engine.backtrack(t, i))
}

/// Rewrites the sequence's scores with the mean or max of its raw scores.
pub fn rescore(seq: &Sequence, mode: RescoreMode) -> Sequence {
    let value = match mode {
        RescoreMode::Average => {
            let mut sum = 0.0;
            for s in &seq.raw_scores {
                sum += s;
            }
            sum / seq.raw_scores.len() as f64
        }
        RescoreMode::Max => seq.raw_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    Sequence {
        rescored: vec![value; seq.raw_scores.len()],
        ..seq.clone()
    }
}

/// Removes the sequence's own boxes and, in each frame of the sequence's
/// span, every same-class box whose IoU with the sequence box of that frame
/// strictly exceeds `suppress_thresh`. Frames outside the span are untouched
/// and the frame structure is preserved.
pub fn suppress(clip: &ClipDetections, seq: &Sequence, suppress_thresh: f64) -> ClipDetections {
    assert!(
        0.0 < suppress_thresh && suppress_thresh < 1.0,
        "suppress_thresh must be in (0, 1), got {suppress_thresh}"
    );
    let mut frames: Vec<Vec<Detection>> = clip
        .frames
        .iter()
        .map(|f| f.detections.clone())
        .collect();
    for (t, si) in seq.frame_indices() {
        let seq_det = clip.frames[t].detections[si];
        frames[t] = clip.frames[t]
            .detections
            .iter()
            .enumerate()
            .filter(|&(i, d)| {
                !(i == si
                    || (d.class == seq_det.class
                        && seq_det.bbox.iou(&d.bbox) > suppress_thresh))
            })
            .map(|(_, d)| *d)
            .collect();
    }
    ClipDetections::from_frames(frames)
}

/// One sequence chosen by the selection loop, tagged with its class. The
/// sequence's indices refer to the clip given to [`seq_nms`].
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedSequence {
    pub class: ClassId,
    pub sequence: Sequence,
}

/// Everything the selection loop produced: the surviving rescored detections
/// and each selected sequence in selection order (classes in ascending id
/// order, then iteration order within a class).
#[derive(Debug, Clone, PartialEq)]
pub struct SeqNmsResult {
    pub clip: ClipDetections,
    pub sequences: Vec<SelectedSequence>,
}

/// Full pipeline over a possibly multi-class clip; see [`seq_nms_detailed`]
/// for the variant that also reports the selected sequences.
pub fn seq_nms(clip: &ClipDetections, config: &SeqNmsConfig) -> ClipDetections {
    seq_nms_detailed(clip, config).clip
}

/// Runs select / rescore / suppress to exhaustion, independently per class.
///
/// Every input detection is either emitted as part of exactly one sequence
/// (with its rescored score) or suppressed. Within each output frame,
/// detections are ordered by their index in the input frame. Geometry is
/// never modified.
pub fn seq_nms_detailed(clip: &ClipDetections, config: &SeqNmsConfig) -> SeqNmsResult {
    config.assert_valid();
    let mut sequences = Vec::new();
    let mut out_frames: Vec<Vec<(usize, Detection)>> = vec![Vec::new(); clip.num_frames()];
    for class in clip.classes() {
        let filtered = filter_by_class(clip, class);
        let graph = build_links(&filtered.clip, config.link_thresh);
        let mut engine = Engine::new(&filtered.clip, &graph);
        while let Some((end_frame, end_index)) = engine.global_best() {
            let selected = engine.backtrack(end_frame, end_index);
            engine.suppress(&selected, config.suppress_thresh);
            let selected = rescore(&selected, config.rescore);
            // Map frame-local indices back to the caller's clip.
            let indices: Vec<usize> = selected
                .frame_indices()
                .map(|(t, i)| filtered.source_indices[t][i])
                .collect();
            let selected = Sequence { indices, ..selected };
            for (k, (t, i)) in selected.frame_indices().enumerate() {
                let source = &clip.frames[t].detections[i];
                out_frames[t].push((
                    i,
                    Detection {
                        bbox: source.bbox,
                        score: selected.rescored[k],
                        class,
                    },
                ));
            }
            sequences.push(SelectedSequence { class, sequence: selected });
        }
    }
    let frames = out_frames
        .into_iter()
        .map(|mut dets| {
            dets.sort_by_key(|&(i, _)| i);
            dets.into_iter().map(|(_, d)| d).collect()
        })
        .collect();
    SeqNmsResult {
        clip: ClipDetections::from_frames(frames),
        sequences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::nms::nms_clip;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn det(b: BBox, score: f64) -> Detection {
        Detection { bbox: b, score, class: ClassId(0) }
    }

    // A box far from everything else used in these tests.
    fn far(score: f64) -> Detection {
        det(bx(500.0, 500.0, 510.0, 510.0), score)
    }

    #[test]
    fn links_require_strictly_greater_iou() {
        let base = bx(0.0, 0.0, 10.0, 10.0);
        let half = bx(0.0, 0.0, 10.0, 20.0); // IoU 0.5 with base
        let near = bx(0.0, 0.0, 10.0, 11.0); // IoU 10/11 with base
        let clip = ClipDetections::from_frames(vec![
            vec![det(base, 0.9)],
            vec![det(half, 0.8), det(near, 0.7)],
        ]);
        let graph = build_links(&clip, 0.5);
        assert_eq!(graph.between(0), &[(0, 1)]);
    }

    #[test]
    fn links_only_between_adjacent_frames() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let clip = ClipDetections::from_frames(vec![
            vec![det(b, 0.9)],
            vec![],
            vec![det(b, 0.8)],
        ]);
        let graph = build_links(&clip, 0.5);
        assert_eq!(graph.num_links(), 0);
    }

    #[test]
    fn chain_beats_higher_single_box() {
        // Linked chain 0.9 + 0.2 + 0.8 = 1.9 outscores the isolated 0.95.
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let clip = ClipDetections::from_frames(vec![
            vec![det(b, 0.9)],
            vec![det(b, 0.2), far(0.95)],
            vec![det(b, 0.8)],
        ]);
        let graph = build_links(&clip, 0.5);
        let seq = select_best_sequence(&clip, &graph).unwrap();
        assert_eq!(seq.start_frame, 0);
        assert_eq!(seq.end_frame, 2);
        assert_eq!(seq.indices, vec![0, 0, 0]);
        assert!((seq.seq_score - 1.9).abs() < 1e-12);
        assert_eq!(seq.raw_scores, vec![0.9, 0.2, 0.8]);
        assert_eq!(seq.rescored, seq.raw_scores);
    }

    #[test]
    fn empty_clip_selects_nothing() {
        let clip = ClipDetections::from_frames(vec![vec![], vec![]]);
        let graph = build_links(&clip, 0.5);
        assert_eq!(select_best_sequence(&clip, &graph), None);
    }

    #[test]
    fn tie_prefers_earliest_end_frame_then_smallest_index() {
        let clip = ClipDetections::from_frames(vec![
            vec![far(0.5)],
            vec![det(bx(0.0, 0.0, 10.0, 10.0), 0.5), det(bx(100.0, 0.0, 110.0, 10.0), 0.5)],
        ]);
        let graph = build_links(&clip, 0.5);
        let seq = select_best_sequence(&clip, &graph).unwrap();
        assert_eq!((seq.start_frame, seq.end_frame), (0, 0));
        assert_eq!(seq.indices, vec![0]);

        let one_frame = ClipDetections::from_frames(vec![vec![
            det(bx(0.0, 0.0, 10.0, 10.0), 0.5),
            det(bx(100.0, 0.0, 110.0, 10.0), 0.5),
        ]]);
        let graph = build_links(&one_frame, 0.5);
        let seq = select_best_sequence(&one_frame, &graph).unwrap();
        assert_eq!(seq.indices, vec![0]);
    }

    #[test]
    fn rescore_average_and_max() {
        let seq = Sequence {
            start_frame: 0,
            end_frame: 2,
            indices: vec![0, 0, 0],
            raw_scores: vec![0.9, 0.2, 0.8],
            rescored: vec![0.9, 0.2, 0.8],
            seq_score: 1.9,
        };
        let avg = rescore(&seq, RescoreMode::Average);
        for s in &avg.rescored {
            assert!((s - 19.0 / 30.0).abs() < 1e-12);
        }
        assert_eq!(avg.raw_scores, seq.raw_scores);
        assert_eq!(avg.seq_score, seq.seq_score);
        let max = rescore(&seq, RescoreMode::Max);
        assert_eq!(max.rescored, vec![0.9, 0.9, 0.9]);
    }

    #[test]
    fn rescore_single_box_is_identity() {
        let seq = Sequence {
            start_frame: 3,
            end_frame: 3,
            indices: vec![1],
            raw_scores: vec![0.77],
            rescored: vec![0.77],
            seq_score: 0.77,
        };
        assert_eq!(rescore(&seq, RescoreMode::Average).rescored, vec![0.77]);
        assert_eq!(rescore(&seq, RescoreMode::Max).rescored, vec![0.77]);
    }

    #[test]
    fn suppress_removes_overlaps_only_inside_span_and_class() {
        let seq_box = bx(0.0, 0.0, 10.0, 10.0);
        let overlap = bx(0.0, 0.0, 10.0, 20.0); // IoU 0.5 > 0.3
        let mut other_class = det(overlap, 0.6);
        other_class.class = ClassId(1);
        let clip = ClipDetections::from_frames(vec![
            vec![det(seq_box, 0.9), det(overlap, 0.5), other_class, far(0.4)],
            vec![det(overlap, 0.7)], // outside the span, untouched
        ]);
        let seq = Sequence {
            start_frame: 0,
            end_frame: 0,
            indices: vec![0],
            raw_scores: vec![0.9],
            rescored: vec![0.9],
            seq_score: 0.9,
        };
        let out = suppress(&clip, &seq, 0.3);
        let kept: Vec<f64> = out.frames[0].detections.iter().map(|d| d.score).collect();
        assert_eq!(kept, vec![0.6, 0.4]);
        assert_eq!(out.frames[1].detections.len(), 1);
    }

    #[test]
    fn suppress_threshold_is_strict() {
        let seq_box = bx(0.0, 0.0, 10.0, 10.0);
        let at_thresh = bx(0.0, 0.0, 10.0, 20.0); // IoU exactly 0.5
        let clip = ClipDetections::from_frames(vec![vec![det(seq_box, 0.9), det(at_thresh, 0.5)]]);
        let seq = Sequence {
            start_frame: 0,
            end_frame: 0,
            indices: vec![0],
            raw_scores: vec![0.9],
            rescored: vec![0.9],
            seq_score: 0.9,
        };
        let out = suppress(&clip, &seq, 0.5);
        assert_eq!(out.frames[0].detections.len(), 1);
        assert_eq!(out.frames[0].detections[0].score, 0.5);
    }

    #[test]
    fn two_disjoint_chains_come_out_in_two_iterations() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(100.0, 100.0, 110.0, 110.0);
        let clip = ClipDetections::from_frames(vec![
            vec![det(a, 0.9), det(b, 0.7)],
            vec![det(a, 0.8), det(b, 0.85)],
        ]);
        let result = seq_nms_detailed(&clip, &SeqNmsConfig::default());
        assert_eq!(result.sequences.len(), 2);
        let first = &result.sequences[0].sequence;
        let second = &result.sequences[1].sequence;
        assert!((first.seq_score - 1.7).abs() < 1e-12);
        assert!((second.seq_score - 1.55).abs() < 1e-12);
        // Averages: (0.9 + 0.8) / 2 and (0.7 + 0.85) / 2.
        assert!((result.clip.frames[0].detections[0].score - 0.85).abs() < 1e-12);
        assert!((result.clip.frames[0].detections[1].score - 0.775).abs() < 1e-12);
        assert_eq!(result.clip.total_detections(), 4);
    }

    #[test]
    fn emitted_scores_come_from_rescoring_while_selection_uses_raw() {
        // Average of the chain is 19/30; the isolated box survives as its own
        // later sequence with its raw score.
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let clip = ClipDetections::from_frames(vec![
            vec![det(b, 0.9)],
            vec![det(b, 0.2), far(0.95)],
            vec![det(b, 0.8)],
        ]);
        let result = seq_nms_detailed(&clip, &SeqNmsConfig::default());
        assert_eq!(result.sequences.len(), 2);
        assert!((result.sequences[0].sequence.seq_score - 1.9).abs() < 1e-12);
        assert_eq!(result.sequences[1].sequence.raw_scores, vec![0.95]);
        let frame1 = &result.clip.frames[1].detections;
        assert_eq!(frame1.len(), 2);
        assert!((frame1[0].score - 19.0 / 30.0).abs() < 1e-12);
        assert_eq!(frame1[1].score, 0.95);
    }

    #[test]
    fn single_frame_clip_degenerates_to_greedy_nms() {
        let dets = vec![
            det(bx(0.0, 0.0, 10.0, 10.0), 0.9),
            det(bx(0.0, 0.0, 10.0, 20.0), 0.8), // IoU 0.5 with the top box
            det(bx(100.0, 100.0, 110.0, 110.0), 0.7),
            det(bx(0.0, 0.0, 9.0, 10.0), 0.6),
        ];
        let clip = ClipDetections::from_frames(vec![dets]);
        let via_seq = seq_nms(&clip, &SeqNmsConfig::default());
        let via_nms = nms_clip(&clip, 0.3);
        assert_eq!(via_seq, via_nms);
    }

    #[test]
    fn every_detection_is_selected_or_suppressed() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let shifted = bx(3.0, 0.0, 13.0, 10.0); // IoU 7/13 with b
        let clip = ClipDetections::from_frames(vec![
            vec![det(b, 0.9), det(shifted, 0.6)],
            vec![det(b, 0.8), far(0.1)],
        ]);
        let result = seq_nms_detailed(&clip, &SeqNmsConfig::default());
        let selected: usize = result.sequences.iter().map(|s| s.sequence.len()).sum();
        assert_eq!(result.clip.total_detections(), selected);
        assert!(selected < clip.total_detections());
        // Suppressed boxes are gone for good: 'shifted' never reappears.
        for f in &result.clip.frames {
            for d in &f.detections {
                assert_ne!(d.bbox, shifted);
            }
        }
    }

    #[test]
    fn classes_run_independently() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let mut c1 = det(b, 0.6);
        c1.class = ClassId(1);
        let clip = ClipDetections::from_frames(vec![
            vec![det(b, 0.9), c1],
            vec![det(b, 0.8), c1],
        ]);
        let result = seq_nms_detailed(&clip, &SeqNmsConfig::default());
        // Same geometry, different classes: two chains, nothing suppressed.
        assert_eq!(result.sequences.len(), 2);
        assert_eq!(result.sequences[0].class, ClassId(0));
        assert_eq!(result.sequences[1].class, ClassId(1));
        assert_eq!(result.clip.total_detections(), 4);
    }

    #[test]
    fn empty_clip_passes_through() {
        let clip = ClipDetections::from_frames(vec![vec![], vec![], vec![]]);
        let result = seq_nms_detailed(&clip, &SeqNmsConfig::default());
        assert_eq!(result.clip.num_frames(), 3);
        assert_eq!(result.clip.total_detections(), 0);
        assert!(result.sequences.is_empty());

        let none = ClipDetections { frames: vec![] };
        assert_eq!(seq_nms(&none, &SeqNmsConfig::default()).num_frames(), 0);
    }

    #[test]
    fn zero_score_boxes_still_terminate_as_singletons() {
        let clip = ClipDetections::from_frames(vec![
            vec![det(bx(0.0, 0.0, 10.0, 10.0), 0.0), far(0.0)],
            vec![det(bx(0.0, 0.0, 10.0, 10.0), 0.0)],
        ]);
        let result = seq_nms_detailed(&clip, &SeqNmsConfig::default());
        assert_eq!(result.clip.total_detections(), 3);
    }

    #[test]
    fn geometry_is_never_modified() {
        let b = bx(1.5, 2.5, 20.25, 30.75);
        let clip = ClipDetections::from_frames(vec![vec![det(b, 0.9)], vec![det(b, 0.4)]]);
        let out = seq_nms(&clip, &SeqNmsConfig::default());
        for f in &out.frames {
            for d in &f.detections {
                assert_eq!(d.bbox, b);
            }
        }
    }

    #[test]
    #[should_panic(expected = "link_thresh")]
    fn invalid_config_panics() {
        let clip = ClipDetections::from_frames(vec![vec![]]);
        let config = SeqNmsConfig { link_thresh: 1.0, ..SeqNmsConfig::default() };
        seq_nms(&clip, &config);
    }
}
