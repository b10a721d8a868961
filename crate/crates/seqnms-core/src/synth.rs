//! Seeded generators of (detections, ground truth) clip pairs on a 640x480
//! canvas, shaped to exercise video post-processing in known ways.
//!
//! Ground-truth tracks are straight-line box trajectories, each confined to
//! its own cell of a 2x2 grid so tracks never collide by accident. Detections
//! are the ground-truth boxes with Gaussian corner jitter and scores near
//! 0.9, plus uniformly placed false positives scoring 0.25-0.55. The dip
//! scenarios depress track scores mid-clip through a tapered cosine window
//! (quarter-cosine ramps around a flat center), which mimics an object
//! getting occluded, small, or blurry, and is exactly what sequence-level
//! rescoring recovers. All randomness comes from ChaCha8 streams seeded
//! explicitly, so every output is bit-reproducible across platforms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::BBox;
use crate::model::{ClassId, ClipDetections, Detection, GroundTruthBox, GroundTruthClip};

const CANVAS_W: f64 = 640.0;
const CANVAS_H: f64 = 480.0;
const CELL_W: f64 = CANVAS_W / 2.0;
const CELL_H: f64 = CANVAS_H / 2.0;
const BASE_SCORE: f64 = 0.9;
const SCORE_NOISE: f64 = 0.02;
const MAX_SPEED: f64 = 2.5;
const FP_SCORE_LO: f64 = 0.25;
const FP_SCORE_HI: f64 = 0.55;
const CHAIN_LEN: usize = 8;
const CHAIN_SCORE: f64 = 0.15;

/// The qualitative regime a generated clip exhibits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Track scores dip mid-clip; geometry unchanged.
    OcclusionDip,
    /// Scores dip while the object (and its boxes) shrink.
    ScaleDip,
    /// Scores dip while box jitter grows.
    BlurDip,
    /// Two near-identical same-class tracks within linking distance.
    SimilarObjectsAdjacent,
    /// A long chain of weak linked false positives against a single strong
    /// real detection — the chain's score sum wins.
    SpuriousAccumulation,
    /// All dip mechanisms at once.
    Mixed,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::OcclusionDip,
        ScenarioKind::ScaleDip,
        ScenarioKind::BlurDip,
        ScenarioKind::SimilarObjectsAdjacent,
        ScenarioKind::SpuriousAccumulation,
        ScenarioKind::Mixed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::OcclusionDip => "occlusion-dip",
            ScenarioKind::ScaleDip => "scale-dip",
            ScenarioKind::BlurDip => "blur-dip",
            ScenarioKind::SimilarObjectsAdjacent => "similar-objects",
            ScenarioKind::SpuriousAccumulation => "spurious-accumulation",
            ScenarioKind::Mixed => "mixed",
        }
    }

    fn dips_scores(&self) -> bool {
        matches!(
            self,
            ScenarioKind::OcclusionDip
                | ScenarioKind::ScaleDip
                | ScenarioKind::BlurDip
                | ScenarioKind::Mixed
        )
    }

    fn dips_scale(&self) -> bool {
        matches!(self, ScenarioKind::ScaleDip | ScenarioKind::Mixed)
    }

    fn dips_sharpness(&self) -> bool {
        matches!(self, ScenarioKind::BlurDip | ScenarioKind::Mixed)
    }
}

/// Parameters for one generated clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub tracks: usize,
    pub num_frames: usize,
    /// Fraction of the base score removed at the center of the dip window.
    pub dip_depth: f64,
    /// Dip window length in frames, centered mid-clip.
    pub dip_width: usize,
    /// Corner jitter as a fraction of box width/height.
    pub jitter_sigma: f64,
    /// Per-frame probability of spawning one false positive.
    pub fp_rate: f64,
    pub seed: u64,
}

impl Scenario {
    /// A scenario of the given kind with the documented default parameters:
    /// 2 tracks over 20 frames, dip depth 0.9 over 8 frames, jitter 0.02,
    /// one expected false positive per frame. [`ScenarioKind::SpuriousAccumulation`]
    /// instead uses a single track and no random false positives, keeping its
    /// planted chain the only distractor.
    pub fn new(kind: ScenarioKind, seed: u64) -> Scenario {
        let spurious = kind == ScenarioKind::SpuriousAccumulation;
        Scenario {
            kind,
            tracks: if spurious { 1 } else { 2 },
            num_frames: 20,
            dip_depth: 0.9,
            dip_width: 8,
            jitter_sigma: 0.02,
            fp_rate: if spurious { 0.0 } else { 1.0 },
            seed,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.num_frames < 2 {
            return Err(ScenarioError::TooFewFrames { num_frames: self.num_frames });
        }
        if !(self.dip_depth > 0.0 && self.dip_depth < 1.0) {
            return Err(ScenarioError::DipDepthOutOfRange { dip_depth: self.dip_depth });
        }
        if !(0.0..=1.0).contains(&self.jitter_sigma) {
            return Err(ScenarioError::JitterOutOfRange { jitter_sigma: self.jitter_sigma });
        }
        if !(0.0..=1.0).contains(&self.fp_rate) {
            return Err(ScenarioError::FpRateOutOfRange { fp_rate: self.fp_rate });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ScenarioError {
    #[error("a clip needs at least 2 frames, got {num_frames}")]
    TooFewFrames { num_frames: usize },
    #[error("dip_depth must be in (0, 1), got {dip_depth}")]
    DipDepthOutOfRange { dip_depth: f64 },
    #[error("jitter_sigma must be in [0, 1], got {jitter_sigma}")]
    JitterOutOfRange { jitter_sigma: f64 },
    #[error("fp_rate must be in [0, 1], got {fp_rate}")]
    FpRateOutOfRange { fp_rate: f64 },
}

// Tapered cosine window over `width` samples: quarter-cosine ramps of length
// width/4 around a flat top of 1. Narrow windows (width < 4) degenerate to a
// rectangle, which keeps short dips at full depth.
fn window_value(k: usize, width: usize) -> f64 {
    let ramp = width / 4;
    if k < ramp {
        0.5 * (1.0 - (PI * (k + 1) as f64 / (ramp + 1) as f64).cos())
    } else if k >= width - ramp {
        window_value(width - 1 - k, width)
    } else {
        1.0
    }
}

// Dip window weight for frame t: 1 at the center of the window, 0 outside.
fn dip_weight(t: usize, num_frames: usize, dip_width: usize) -> f64 {
    let width = dip_width.min(num_frames);
    let start = (num_frames - width) / 2;
    if t < start || t >= start + width {
        return 0.0;
    }
    window_value(t - start, width)
}

struct Track {
    class: ClassId,
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    vx: f64,
    vy: f64,
}

impl Track {
    // Ground-truth box at frame t, optionally shrunk around its center.
    fn gt_box(&self, t: usize, scale: f64) -> BBox {
        let x1 = self.x0 + self.vx * t as f64;
        let y1 = self.y0 + self.vy * t as f64;
        let (cw, ch) = (self.w * scale, self.h * scale);
        let cx = x1 + self.w / 2.0;
        let cy = y1 + self.h / 2.0;
        BBox::new(cx - cw / 2.0, cy - ch / 2.0, cx + cw / 2.0, cy + ch / 2.0)
            .expect("track boxes are finite and ordered")
    }
}

// Start coordinate such that start + v * t plus the box stays inside
// [cell_lo, cell_lo + cell_len] for all t.
fn place_start(rng: &mut ChaCha8Rng, cell_lo: f64, cell_len: f64, size: f64, v: f64, frames: usize) -> f64 {
    let drift = v * (frames - 1) as f64;
    let lo = cell_lo + (-drift).max(0.0);
    let hi = cell_lo + cell_len - size - drift.max(0.0);
    rng.random_range(lo..hi)
}

fn sample_track(rng: &mut ChaCha8Rng, index: usize, class: ClassId, frames: usize) -> Track {
    let cell_x = (index % 2) as f64 * CELL_W;
    let cell_y = ((index / 2) % 2) as f64 * CELL_H;
    let w = rng.random_range(50.0..90.0);
    let h = rng.random_range(50.0..90.0);
    // Cap speed so the trajectory interval can never outgrow the cell.
    let vmax_x = MAX_SPEED.min((CELL_W - w) / (2.0 * (frames - 1) as f64));
    let vmax_y = MAX_SPEED.min((CELL_H - h) / (2.0 * (frames - 1) as f64));
    let vx = rng.random_range(-vmax_x..vmax_x);
    let vy = rng.random_range(-vmax_y..vmax_y);
    let x0 = place_start(rng, cell_x, CELL_W, w, vx, frames);
    let y0 = place_start(rng, cell_y, CELL_H, h, vy, frames);
    Track { class, x0, y0, w, h, vx, vy }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

// Jittered copy of a ground-truth box, repaired to stay a valid box inside
// the canvas.
fn jittered_box(rng: &mut ChaCha8Rng, gt: BBox, sigma: f64) -> BBox {
    let sx = sigma * gt.width();
    let sy = sigma * gt.height();
    let noise = |rng: &mut ChaCha8Rng, s: f64| -> f64 {
        let n: f64 = rng.sample(StandardNormal);
        n * s
    };
    let mut xs = [gt.x1() + noise(rng, sx), gt.x2() + noise(rng, sx)];
    let mut ys = [gt.y1() + noise(rng, sy), gt.y2() + noise(rng, sy)];
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    BBox::new(
        xs[0].clamp(0.0, CANVAS_W),
        ys[0].clamp(0.0, CANVAS_H),
        xs[1].clamp(0.0, CANVAS_W),
        ys[1].clamp(0.0, CANVAS_H),
    )
    .expect("sorted clamped corners form a valid box")
}

/// Generates one (detections, ground truth) pair from the scenario's
/// parameters. The same scenario always produces the same pair.
pub fn generate(scenario: &Scenario) -> Result<(ClipDetections, GroundTruthClip), ScenarioError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let frames = scenario.num_frames;
    let mut gt_frames: Vec<Vec<GroundTruthBox>> = vec![Vec::new(); frames];
    let mut det_frames: Vec<Vec<Detection>> = vec![Vec::new(); frames];

    let similar = scenario.kind == ScenarioKind::SimilarObjectsAdjacent;
    let spurious = scenario.kind == ScenarioKind::SpuriousAccumulation;
    let mut tracks: Vec<Track> = Vec::with_capacity(scenario.tracks);
    for k in 0..scenario.tracks {
        if similar && k == 1 {
            // The partner shadows track 0: same motion and class, offset by a
            // fifth of a box width so the pair stays within linking distance.
            let first = &tracks[0];
            let partner = Track { x0: first.x0 + 0.2 * first.w, ..*first };
            tracks.push(partner);
            continue;
        }
        let class = if similar { ClassId(0) } else { ClassId((k % 2) as u32) };
        tracks.push(sample_track(&mut rng, k % 4, class, frames));
    }

    for track in &tracks {
        for t in 0..frames {
            let weight = dip_weight(t, frames, scenario.dip_width);
            // Gentler than the score dip so adjacent shrinking boxes always
            // keep IoU above the default link threshold.
            let scale = if scenario.kind.dips_scale() {
                1.0 - (scenario.dip_depth / 2.5) * weight
            } else {
                1.0
            };
            let gt = track.gt_box(t, scale);
            let track_id = Some(gt_frames[t].len() as u64);
            gt_frames[t].push(GroundTruthBox { bbox: gt, class: track.class, track_id });
            if spurious {
                continue;
            }
            let sigma = if scenario.kind.dips_sharpness() {
                scenario.jitter_sigma * (1.0 + 1.5 * weight)
            } else {
                scenario.jitter_sigma
            };
            let bbox = jittered_box(&mut rng, gt, sigma);
            let noise: f64 = rng.sample(StandardNormal);
            let mut score = clamp01(BASE_SCORE + noise * SCORE_NOISE);
            if scenario.kind.dips_scores() {
                score *= 1.0 - scenario.dip_depth * weight;
            }
            det_frames[t].push(Detection { bbox, score, class: track.class });
        }
    }

    if spurious {
        // One strong real detection mid-clip per track, plus a parked chain
        // of identical weak boxes whose sum outweighs it.
        let mid = frames / 2;
        for track in &tracks {
            let bbox = jittered_box(&mut rng, track.gt_box(mid, 1.0), scenario.jitter_sigma);
            det_frames[mid].push(Detection { bbox, score: BASE_SCORE, class: track.class });
        }
        let chain_len = CHAIN_LEN.min(frames);
        let side = 60.0;
        // Parked in the lower-right grid cell with margin, clear of the
        // track's cell even after jitter.
        let cx = rng.random_range((CELL_W + 30.0)..(CANVAS_W - side));
        let cy = rng.random_range((CELL_H + 30.0)..(CANVAS_H - side));
        let chain_box = BBox::new(cx, cy, cx + side, cy + side).expect("chain box fits the canvas");
        for frame in det_frames.iter_mut().take(chain_len) {
            frame.push(Detection { bbox: chain_box, score: CHAIN_SCORE, class: ClassId(0) });
        }
    }

    for frame in &mut det_frames {
        if rng.random::<f64>() < scenario.fp_rate {
            let w = rng.random_range(40.0..100.0);
            let h = rng.random_range(40.0..100.0);
            let x = rng.random_range(0.0..(CANVAS_W - w));
            let y = rng.random_range(0.0..(CANVAS_H - h));
            frame.push(Detection {
                bbox: BBox::new(x, y, x + w, y + h).expect("false positives fit the canvas"),
                score: rng.random_range(FP_SCORE_LO..FP_SCORE_HI),
                class: ClassId(rng.random_range(0..2)),
            });
        }
    }

    Ok((
        ClipDetections::from_frames(det_frames),
        GroundTruthClip { frames: gt_frames },
    ))
}

/// `count` clips of one kind with default parameters, each clip seeded from
/// a ChaCha8 stream over `seed`.
pub fn scenario_batch(
    kind: ScenarioKind,
    seed: u64,
    count: usize,
) -> Vec<(ClipDetections, GroundTruthClip)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| generate(&Scenario::new(kind, rng.random())).expect("default parameters are valid"))
        .collect()
}

/// How many clips of each kind [`scenario_suite`] contains.
pub const SUITE_CLIPS_PER_KIND: usize = 5;

/// The standard 30-clip benchmark: [`SUITE_CLIPS_PER_KIND`] clips per kind,
/// in [`ScenarioKind::ALL`] order, fully determined by `seed`.
pub fn scenario_suite(seed: u64) -> Vec<(ClipDetections, GroundTruthClip)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScenarioKind::ALL
        .iter()
        .flat_map(|&kind| scenario_batch(kind, rng.random(), SUITE_CLIPS_PER_KIND))
        .collect()
}
