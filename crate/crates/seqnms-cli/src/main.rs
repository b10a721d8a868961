use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use seqnms_core::clipfile::{load_clip, save_clip, ClipFile};
use seqnms_core::eval::{comparison_csv, evaluate, per_class_best, report_csv, EvalReport};
use seqnms_core::model::{ClipDetections, GroundTruthClip};
use seqnms_core::nms::nms_clip;
use seqnms_core::oracle::{brute_force_best_sequence, random_clip};
use seqnms_core::seqnms::{build_links, select_best_sequence, seq_nms, RescoreMode, SeqNmsConfig};
use seqnms_core::synth::{scenario_batch, scenario_suite, ScenarioKind, SUITE_CLIPS_PER_KIND};

const THREADS_ENV: &str = "SEQNMS_THREADS";

#[derive(Parser)]
#[command(
    name = "seqnms",
    about = "Synthesize detection clips, post-process them, and score the results",
    version
)]
struct Cli {
    /// Worker threads; defaults to SEQNMS_THREADS or all cores
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic clips with inline ground truth
    Synth {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory the clip files are written to
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Clips to generate; ignored for the fixed-size suite
        #[arg(long, default_value_t = SUITE_CLIPS_PER_KIND)]
        count: usize,
    },
    /// Post-process every clip in a directory with one method
    Run {
        #[arg(long, value_enum)]
        method: Method,
        /// Minimum IoU for same-object links between adjacent frames
        #[arg(long, default_value_t = 0.5)]
        link_thresh: f64,
        /// IoU above which boxes near a selected sequence are dropped
        #[arg(long, default_value_t = 0.3)]
        suppress_thresh: f64,
        /// IoU threshold for the per-frame baseline
        #[arg(long, default_value_t = 0.3)]
        nms_thresh: f64,
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Score a directory of detections against a directory of ground truth
    Eval {
        #[arg(long, value_name = "DIR")]
        dets: PathBuf,
        #[arg(long, value_name = "DIR")]
        gt: PathBuf,
        /// Minimum IoU for a detection to claim a ground-truth box
        #[arg(long, default_value_t = 0.5)]
        match_iou: f64,
        /// Also write the per-class table as CSV
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Run every method on the same clips and score them side by side
    Compare {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        gt: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        match_iou: f64,
        #[arg(long, default_value_t = 0.5)]
        link_thresh: f64,
        #[arg(long, default_value_t = 0.3)]
        suppress_thresh: f64,
        #[arg(long, default_value_t = 0.3)]
        nms_thresh: f64,
        /// Also write the per-class comparison as CSV
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Check the sequence selector against exhaustive enumeration
    OracleCheck {
        /// Number of random clips to check, seeded 0..N
        #[arg(long, default_value_t = 200)]
        seeds: u64,
        #[arg(long, default_value_t = 5)]
        max_frames: usize,
        #[arg(long, default_value_t = 6)]
        max_boxes: usize,
        #[arg(long, default_value_t = 0.5)]
        link_thresh: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Nms,
    SeqnmsAvg,
    SeqnmsMax,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ScenarioArg {
    OcclusionDip,
    ScaleDip,
    BlurDip,
    SimilarObjects,
    SpuriousAccumulation,
    Mixed,
    Suite,
}

impl ScenarioArg {
    fn kind(self) -> Option<ScenarioKind> {
        match self {
            ScenarioArg::OcclusionDip => Some(ScenarioKind::OcclusionDip),
            ScenarioArg::ScaleDip => Some(ScenarioKind::ScaleDip),
            ScenarioArg::BlurDip => Some(ScenarioKind::BlurDip),
            ScenarioArg::SimilarObjects => Some(ScenarioKind::SimilarObjectsAdjacent),
            ScenarioArg::SpuriousAccumulation => Some(ScenarioKind::SpuriousAccumulation),
            ScenarioArg::Mixed => Some(ScenarioKind::Mixed),
            ScenarioArg::Suite => None,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    setup_threads(cli.threads)?;
    match cli.command {
        Command::Synth { scenario, seed, out, count } => cmd_synth(scenario, seed, &out, count),
        Command::Run { method, link_thresh, suppress_thresh, nms_thresh, input, out } => {
            cmd_run(method, link_thresh, suppress_thresh, nms_thresh, &input, &out)
        }
        Command::Eval { dets, gt, match_iou, csv } => {
            cmd_eval(&dets, &gt, match_iou, csv.as_deref())
        }
        Command::Compare {
            input,
            gt,
            match_iou,
            link_thresh,
            suppress_thresh,
            nms_thresh,
            csv,
        } => cmd_compare(
            &input,
            &gt,
            match_iou,
            link_thresh,
            suppress_thresh,
            nms_thresh,
            csv.as_deref(),
        ),
        Command::OracleCheck { seeds, max_frames, max_boxes, link_thresh } => {
            cmd_oracle_check(seeds, max_frames, max_boxes, link_thresh)
        }
    }
}

fn setup_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match env::var(THREADS_ENV) {
            Ok(value) => Some(value.parse().with_context(|| {
                format!("{THREADS_ENV} must be a positive integer, got {value:?}")
            })?),
            Err(_) => None,
        },
    };
    let Some(threads) = threads else {
        return Ok(());
    };
    if threads == 0 {
        bail!("thread count must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("initializing the thread pool")
}

fn check_unit_interval(value: f64, flag: &str) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        bail!("--{flag} must be strictly between 0 and 1, got {value}");
    }
    Ok(())
}

fn class_labels() -> BTreeMap<u32, String> {
    BTreeMap::from([(0, "object-a".to_string()), (1, "object-b".to_string())])
}

fn cmd_synth(scenario: ScenarioArg, seed: u64, out: &Path, count: usize) -> Result<()> {
    let clips: Vec<(String, (ClipDetections, GroundTruthClip))> = match scenario.kind() {
        Some(kind) => scenario_batch(kind, seed, count)
            .into_iter()
            .enumerate()
            .map(|(i, pair)| (format!("{}-{i:02}", kind.name()), pair))
            .collect(),
        None => ScenarioKind::ALL
            .iter()
            .flat_map(|kind| (0..SUITE_CLIPS_PER_KIND).map(move |i| (kind, i)))
            .zip(scenario_suite(seed))
            .map(|((kind, i), pair)| (format!("{}-{i:02}", kind.name()), pair))
            .collect(),
    };
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    for (clip_id, (detections, ground_truth)) in &clips {
        let path = out.join(format!("{clip_id}.json"));
        let file = ClipFile {
            clip_id: clip_id.clone(),
            classes: class_labels(),
            detections: detections.clone(),
            ground_truth: Some(ground_truth.clone()),
        };
        save_clip(&path, &file).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("wrote {} clips to {}", clips.len(), out.display());
    Ok(())
}

/// Loads every `.json` clip in the directory, sorted by clip id. Clamp
/// warnings go to stderr in that same order.
fn load_dir(dir: &Path) -> Result<Vec<ClipFile>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    if paths.is_empty() {
        bail!("no .json clip files in {}", dir.display());
    }
    paths.sort();
    let loaded = paths
        .par_iter()
        .map(|path| load_clip(path).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let mut files = Vec::with_capacity(loaded.len());
    for (path, clip) in paths.iter().zip(loaded) {
        for warning in &clip.warnings {
            eprintln!("warning: {}: {warning}", path.display());
        }
        files.push(clip.file);
    }
    files.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    for pair in files.windows(2) {
        if pair[0].clip_id == pair[1].clip_id {
            bail!("duplicate clip id {:?} in {}", pair[0].clip_id, dir.display());
        }
    }
    Ok(files)
}

fn cmd_run(
    method: Method,
    link_thresh: f64,
    suppress_thresh: f64,
    nms_thresh: f64,
    input: &Path,
    out: &Path,
) -> Result<()> {
    check_unit_interval(link_thresh, "link-thresh")?;
    check_unit_interval(suppress_thresh, "suppress-thresh")?;
    check_unit_interval(nms_thresh, "nms-thresh")?;
    let files = load_dir(input)?;
    let processed: Vec<ClipFile> = files
        .into_par_iter()
        .map(|file| ClipFile {
            detections: apply_method(&file.detections, method, link_thresh, suppress_thresh, nms_thresh),
            ..file
        })
        .collect();
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    for file in &processed {
        let path = out.join(format!("{}.json", file.clip_id));
        save_clip(&path, file).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("processed {} clips into {}", processed.len(), out.display());
    Ok(())
}

fn apply_method(
    detections: &ClipDetections,
    method: Method,
    link_thresh: f64,
    suppress_thresh: f64,
    nms_thresh: f64,
) -> ClipDetections {
    let config = |rescore| SeqNmsConfig { link_thresh, suppress_thresh, rescore };
    match method {
        Method::Nms => nms_clip(detections, nms_thresh),
        Method::SeqnmsAvg => seq_nms(detections, &config(RescoreMode::Average)),
        Method::SeqnmsMax => seq_nms(detections, &config(RescoreMode::Max)),
    }
}

/// Pairs detection clips with ground-truth clips by clip id and returns them
/// in id order.
fn pair_with_gt(
    dets: Vec<ClipFile>,
    gt_files: Vec<ClipFile>,
    gt_dir: &Path,
) -> Result<(Vec<ClipDetections>, Vec<GroundTruthClip>)> {
    let mut gt_by_id = BTreeMap::new();
    for file in gt_files {
        let gt = file.ground_truth.ok_or_else(|| {
            anyhow::anyhow!("clip {:?} in {} has no ground-truth section", file.clip_id, gt_dir.display())
        })?;
        gt_by_id.insert(file.clip_id, gt);
    }
    let mut det_clips = Vec::with_capacity(dets.len());
    let mut gt_clips = Vec::with_capacity(dets.len());
    for file in dets {
        let gt = gt_by_id.remove(&file.clip_id).ok_or_else(|| {
            anyhow::anyhow!("no ground-truth clip with id {:?} in {}", file.clip_id, gt_dir.display())
        })?;
        det_clips.push(file.detections);
        gt_clips.push(gt);
    }
    if let Some(id) = gt_by_id.into_keys().next() {
        bail!("ground-truth clip {id:?} has no matching detections");
    }
    Ok((det_clips, gt_clips))
}

fn write_csv(path: Option<&Path>, text: &str) -> Result<()> {
    if let Some(path) = path {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_eval(dets: &Path, gt: &Path, match_iou: f64, csv: Option<&Path>) -> Result<()> {
    if !(match_iou > 0.0 && match_iou <= 1.0) {
        bail!("--match-iou must be in (0, 1], got {match_iou}");
    }
    let (det_clips, gt_clips) = pair_with_gt(load_dir(dets)?, load_dir(gt)?, gt)?;
    let report = evaluate(&det_clips, &gt_clips, match_iou)?;
    for (class, ap) in &report.per_class_ap {
        println!("class {class}: ap {ap:.4}");
    }
    println!("mAP {:.4}", report.map);
    write_csv(csv, &report_csv(&report))
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    input: &Path,
    gt: &Path,
    match_iou: f64,
    link_thresh: f64,
    suppress_thresh: f64,
    nms_thresh: f64,
    csv: Option<&Path>,
) -> Result<()> {
    if !(match_iou > 0.0 && match_iou <= 1.0) {
        bail!("--match-iou must be in (0, 1], got {match_iou}");
    }
    check_unit_interval(link_thresh, "link-thresh")?;
    check_unit_interval(suppress_thresh, "suppress-thresh")?;
    check_unit_interval(nms_thresh, "nms-thresh")?;
    let (det_clips, gt_clips) = pair_with_gt(load_dir(input)?, load_dir(gt)?, gt)?;
    let methods = [Method::Nms, Method::SeqnmsAvg, Method::SeqnmsMax];
    let names = ["nms", "seqnms-avg", "seqnms-max"];
    let mut reports: Vec<EvalReport> = methods
        .par_iter()
        .map(|&method| {
            let processed: Vec<ClipDetections> = det_clips
                .par_iter()
                .map(|clip| apply_method(clip, method, link_thresh, suppress_thresh, nms_thresh))
                .collect();
            evaluate(&processed, &gt_clips, match_iou).map_err(anyhow::Error::from)
        })
        .collect::<Result<_>>()?;
    for (report, name) in reports.iter_mut().zip(names) {
        report.method_name = name.to_string();
    }
    let best = per_class_best(&reports)?;
    println!("{:<16}mAP", "method");
    for report in reports.iter().chain([&best]) {
        println!("{:<16}{:.4}", report.method_name, report.map);
    }
    write_csv(csv, &comparison_csv(&reports[0], &reports[1], &reports[2], &best)?)
}

fn cmd_oracle_check(seeds: u64, max_frames: usize, max_boxes: usize, link_thresh: f64) -> Result<()> {
    check_unit_interval(link_thresh, "link-thresh")?;
    let mismatches: Vec<String> = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let clip = random_clip(seed, max_frames, max_boxes);
            let graph = build_links(&clip, link_thresh);
            let dp = select_best_sequence(&clip, &graph);
            let exhaustive = brute_force_best_sequence(&clip, link_thresh)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            match (dp, exhaustive) {
                (Some(a), Some(b)) if (a.seq_score - b.seq_score).abs() < 1e-9 => Ok(()),
                (None, None) => Ok(()),
                (a, b) => Err(format!(
                    "seed {seed}: selector {:?} vs exhaustive {:?}",
                    a.map(|s| s.seq_score),
                    b.map(|s| s.seq_score)
                )),
            }
        })
        .filter_map(Result::err)
        .collect();
    if !mismatches.is_empty() {
        for line in &mismatches {
            eprintln!("{line}");
        }
        bail!("{} of {seeds} clips disagree with exhaustive enumeration", mismatches.len());
    }
    println!("{seeds} clips checked: selector matches exhaustive enumeration");
    Ok(())
}
