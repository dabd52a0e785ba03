//! Session-directory pipeline: the operations behind the `prawn-measure`
//! binary. A session is a directory holding `manifest.toml`, an intrinsics
//! document, depth frames, and polygon annotations and/or instance masks.
//!
//! Commands return structured outcomes; the binary maps them to exit codes
//! (0 = ok, 2 = bad input, 3 = nothing produced).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analytics::{
    render_report, Measurement, RejectionStats, ReportBundle, ReportOptions, Source,
};
use crate::error::{Error, Result};
use crate::evaluation::{summarize_with_breakdown, EvalSummary, Region, ScoredInstance};
use crate::ingest::{
    load_depth, load_intrinsics, load_manifest, load_mask_pgm, parse_via, rasterize_polygon,
    BinaryMask, CameraIntrinsics, DepthEncoding, DepthFrame, PolygonAnnotation, SessionManifest,
};
use crate::ranging::{measure, LengthResult, MeasurementStatus, RangingConfig, RejectReason};
use crate::skeleton::{build_graph, longest_path_centreline, skeletonize};
use crate::tracking::{aggregate_lengths, BBox, Detection, SortTracker, TrackerConfig};

/// Merged run settings: defaults, then config file, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ranging: RangingConfig,
    pub tracker: TrackerConfig,
    pub report: ReportOptions,
    /// Worker threads for frame-level parallelism; 0 uses all cores.
    pub jobs: usize,
    pub seed: u64,
    pub dump_skeleton: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ranging: RangingConfig::default(),
            tracker: TrackerConfig::default(),
            report: ReportOptions::default(),
            jobs: 0,
            seed: 42,
            dump_skeleton: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.ranging.validate()?;
        self.tracker.validate()?;
        if !(self.report.histogram_bin_mm > 0.0) {
            return Err(Error::config("report.histogram_bin_mm", "must be positive"));
        }
        Ok(())
    }
}

/// On-disk config file; every field mirrors a CLI flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    #[serde(default)]
    ranging: RangingSection,
    #[serde(default)]
    tracker: TrackerSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    report: ReportSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangingSection {
    sample_stride: Option<usize>,
    validity_threshold: Option<f64>,
    z_outlier_mad_k: Option<f64>,
    min_depth_m: Option<f64>,
    max_depth_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackerSection {
    max_age: Option<u32>,
    min_hits: Option<u32>,
    iou_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    jobs: Option<usize>,
    seed: Option<u64>,
    dump_skeleton: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportSection {
    histogram_bin_mm: Option<f64>,
}

/// Apply a config document on top of `base`. Flags are applied by the caller
/// afterwards, so the precedence is defaults < file < flags.
pub fn apply_config_file(base: &RunConfig, text: &str) -> Result<RunConfig> {
    let file: RunConfigFile = toml::from_str(text).map_err(|e| Error::Config {
        field: "config".into(),
        msg: e.message().to_string(),
    })?;
    let mut cfg = base.clone();
    if let Some(v) = file.ranging.sample_stride {
        cfg.ranging.sample_stride = v;
    }
    if let Some(v) = file.ranging.validity_threshold {
        cfg.ranging.validity_threshold = v;
    }
    if let Some(v) = file.ranging.z_outlier_mad_k {
        cfg.ranging.z_outlier_mad_k = v;
    }
    if let Some(v) = file.ranging.min_depth_m {
        cfg.ranging.min_depth_m = v;
    }
    if let Some(v) = file.ranging.max_depth_m {
        cfg.ranging.max_depth_m = v;
    }
    if let Some(v) = file.tracker.max_age {
        cfg.tracker.max_age = v;
    }
    if let Some(v) = file.tracker.min_hits {
        cfg.tracker.min_hits = v;
    }
    if let Some(v) = file.tracker.iou_threshold {
        cfg.tracker.iou_threshold = v;
    }
    if let Some(v) = file.run.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = file.run.seed {
        cfg.seed = v;
    }
    if let Some(v) = file.run.dump_skeleton {
        cfg.dump_skeleton = v;
    }
    if let Some(v) = file.report.histogram_bin_mm {
        cfg.report.histogram_bin_mm = v;
    }
    Ok(cfg)
}

/// A session directory loaded and validated.
pub struct LoadedSession {
    pub dir: PathBuf,
    pub name: String,
    pub manifest: SessionManifest,
    pub intrinsics: CameraIntrinsics,
}

pub fn load_session(dir: &Path) -> Result<LoadedSession> {
    let manifest_path = dir.join("manifest.toml");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest = load_manifest(&text)?;
    manifest.check_resolvable(dir)?;
    let k_path = dir.join(&manifest.intrinsics);
    let k_text =
        fs::read_to_string(&k_path).map_err(|e| Error::io(k_path.display().to_string(), e))?;
    let intrinsics = load_intrinsics(&k_text)?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "session".into());
    Ok(LoadedSession {
        dir: dir.to_path_buf(),
        name,
        manifest,
        intrinsics,
    })
}

/// One measured instance, ready for the CSV row and the tracker.
#[derive(Debug, Clone)]
pub struct InstanceOutcome {
    pub frame_index: usize,
    pub result: LengthResult,
    pub bbox: Option<BBox>,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn frame_depth(session: &LoadedSession, depth_rel: &str) -> Result<DepthFrame> {
    let bytes = read_file(&session.dir.join(depth_rel))?;
    load_depth(
        &bytes,
        DepthEncoding::from_path(depth_rel),
        session.intrinsics.width,
        session.intrinsics.height,
        session.intrinsics.depth_scale,
    )
}

/// Instance masks for one frame: direct mask files when present, rasterized
/// polygons otherwise. Polygons are matched to the frame by the colour file's
/// basename or the frame id.
fn frame_masks(
    session: &LoadedSession,
    frame_index: usize,
    annotation_cache: &HashMap<String, Vec<PolygonAnnotation>>,
) -> Result<Vec<BinaryMask>> {
    let frame = &session.manifest.frames[frame_index];
    if !frame.masks.is_empty() {
        return frame
            .masks
            .iter()
            .map(|rel| load_mask_pgm(&read_file(&session.dir.join(rel))?))
            .collect();
    }
    let ann_rel = frame.annotations.as_ref().expect("validated at load");
    let annotations = &annotation_cache[ann_rel.as_str()];
    let colour_stem = Path::new(&frame.colour)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut masks = Vec::new();
    for ann in annotations {
        if ann.image_id == colour_stem || ann.image_id == frame.id {
            match rasterize_polygon(ann, session.intrinsics.width, session.intrinsics.height) {
                Ok(mask) => masks.push(mask),
                Err(Error::EmptyMask) => masks.push(BinaryMask::empty(
                    session.intrinsics.width,
                    session.intrinsics.height,
                )),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(masks)
}

fn parse_session_annotations(
    session: &LoadedSession,
) -> Result<HashMap<String, Vec<PolygonAnnotation>>> {
    let mut cache = HashMap::new();
    for frame in &session.manifest.frames {
        let Some(rel) = &frame.annotations else {
            continue;
        };
        if cache.contains_key(rel.as_str()) {
            continue;
        }
        let bytes = read_file(&session.dir.join(rel))?;
        let text = String::from_utf8_lossy(&bytes);
        let parsed = parse_via(&text)?;
        cache.insert(rel.clone(), parsed.annotations);
    }
    Ok(cache)
}

fn mask_bbox(mask: &BinaryMask) -> Option<BBox> {
    mask.bbox().map(|(x1, y1, x2, y2)| BBox {
        x1: x1 as f64,
        y1: y1 as f64,
        x2: x2 as f64 + 1.0,
        y2: y2 as f64 + 1.0,
    })
}

/// Measure every instance of every frame; frames fan out over a rayon pool.
pub fn measure_session(session: &LoadedSession, cfg: &RunConfig) -> Result<Vec<InstanceOutcome>> {
    cfg.validate()?;
    let annotations = parse_session_annotations(session)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config {
            field: "jobs".into(),
            msg: e.to_string(),
        })?;

    let per_frame: Vec<Result<Vec<InstanceOutcome>>> = pool.install(|| {
        use rayon::prelude::*;
        (0..session.manifest.frames.len())
            .into_par_iter()
            .map(|frame_index| {
                let frame = &session.manifest.frames[frame_index];
                let depth = frame_depth(session, &frame.depth)?;
                let masks = frame_masks(session, frame_index, &annotations)?;
                let mut outcomes = Vec::with_capacity(masks.len());
                for (instance_id, mask) in masks.iter().enumerate() {
                    let result = measure(
                        mask,
                        &depth,
                        &session.intrinsics,
                        &cfg.ranging,
                        &frame.id,
                        instance_id as u32,
                    )?;
                    outcomes.push(InstanceOutcome {
                        frame_index,
                        result,
                        bbox: mask_bbox(mask),
                    });
                }
                Ok(outcomes)
            })
            .collect()
    });

    let mut all = Vec::new();
    for frame in per_frame {
        all.extend(frame?);
    }
    Ok(all)
}

/// Render the measurements CSV (one row per instance, accepted or not).
pub fn measurements_csv(session_name: &str, outcomes: &[InstanceOutcome]) -> String {
    let mut out =
        String::from("session,frame_id,instance_id,status,reason,validity_ratio,length_mm,n_samples\n");
    for o in outcomes {
        let r = &o.result;
        let (status, reason) = match r.status {
            MeasurementStatus::Accepted => ("accepted", ""),
            MeasurementStatus::Rejected(why) => ("rejected", why.as_str()),
        };
        let length = r
            .length_m
            .map(|m| format!("{:.1}", m * 1000.0))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{:.4},{},{}",
            session_name, r.frame_id, r.instance_id, status, reason, r.validity_ratio, length,
            r.n_samples
        )
        .unwrap();
    }
    out
}

/// Growth rows for the analytics CSV: accepted CV measurements plus the
/// manifest's hand measurements as feed-tray samples.
pub fn growth_rows(session: &LoadedSession, outcomes: &[InstanceOutcome]) -> Vec<Measurement> {
    let mut rows = Vec::new();
    for o in outcomes {
        if let (MeasurementStatus::Accepted, Some(m)) = (o.result.status, o.result.length_m) {
            rows.push(Measurement {
                pond_id: session.manifest.pond_id.clone(),
                doc: session.manifest.doc,
                source: Source::Cv,
                length_mm: m * 1000.0,
            });
        }
    }
    if let Some(hand) = &session.manifest.hand_measurements_mm {
        for &mm in hand {
            rows.push(Measurement {
                pond_id: session.manifest.pond_id.clone(),
                doc: session.manifest.doc,
                source: Source::FeedTraySample,
                length_mm: mm,
            });
        }
    }
    rows
}

pub fn rejection_stats(outcomes: &[InstanceOutcome]) -> RejectionStats {
    let n_measured = outcomes.len();
    let n_rejected = outcomes
        .iter()
        .filter(|o| !o.result.is_accepted())
        .count();
    RejectionStats {
        n_measured,
        n_rejected,
    }
}

/// Per-reason rejection counts for the log line.
pub fn rejection_breakdown(outcomes: &[InstanceOutcome]) -> HashMap<RejectReason, usize> {
    let mut map = HashMap::new();
    for o in outcomes {
        if let MeasurementStatus::Rejected(why) = o.result.status {
            *map.entry(why).or_insert(0) += 1;
        }
    }
    map
}

pub struct MeasureOutcome {
    pub outcomes: Vec<InstanceOutcome>,
    pub csv: String,
    pub growth: Vec<Measurement>,
    pub rejections: RejectionStats,
}

pub fn cmd_measure(session_dir: &Path, cfg: &RunConfig) -> Result<MeasureOutcome> {
    let session = load_session(session_dir)?;
    let outcomes = measure_session(&session, cfg)?;
    if cfg.dump_skeleton {
        dump_skeletons(&session)?;
    }
    Ok(MeasureOutcome {
        csv: measurements_csv(&session.name, &outcomes),
        growth: growth_rows(&session, &outcomes),
        rejections: rejection_stats(&outcomes),
        outcomes,
    })
}

/// One summarized track row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRow {
    pub track_id: u64,
    pub first_frame: String,
    pub last_frame: String,
    pub n_detections: u32,
    pub n_accepted_lengths: usize,
    pub robust_length_mm: Option<f64>,
}

pub struct TrackOutcome {
    pub rows: Vec<TrackRow>,
    pub csv: String,
    pub growth: Vec<Measurement>,
}

pub fn cmd_track(session_dir: &Path, cfg: &RunConfig) -> Result<TrackOutcome> {
    let session = load_session(session_dir)?;
    let outcomes = measure_session(&session, cfg)?;

    // Group measured instances per frame, then run SORT in capture order.
    let n_frames = session.manifest.frames.len();
    let mut per_frame: Vec<Vec<Detection>> = vec![Vec::new(); n_frames];
    for o in &outcomes {
        if let Some(bbox) = o.bbox {
            per_frame[o.frame_index].push(Detection {
                bbox,
                length_m: if o.result.is_accepted() {
                    o.result.length_m
                } else {
                    None
                },
            });
        }
    }
    let mut tracker = SortTracker::new(cfg.tracker.clone());
    for (frame_index, dets) in per_frame.iter().enumerate() {
        tracker.step(frame_index as u64, dets)?;
    }

    let frame_id = |idx: u64| session.manifest.frames[idx as usize].id.clone();
    let mut rows = Vec::new();
    let mut growth = Vec::new();
    for track in tracker.all_tracks() {
        let robust = aggregate_lengths(&track.lengths);
        rows.push(TrackRow {
            track_id: track.id,
            first_frame: frame_id(track.first_frame),
            last_frame: frame_id(track.last_frame),
            n_detections: track.n_detections,
            n_accepted_lengths: track.lengths.len(),
            robust_length_mm: robust.map(|m| m * 1000.0),
        });
        if let Some(m) = robust {
            growth.push(Measurement {
                pond_id: session.manifest.pond_id.clone(),
                doc: session.manifest.doc,
                source: Source::CvTracked,
                length_mm: m * 1000.0,
            });
        }
    }

    let mut csv = String::from(
        "session,track_id,first_frame,last_frame,n_detections,n_accepted_lengths,robust_length_mm\n",
    );
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            session.name,
            r.track_id,
            r.first_frame,
            r.last_frame,
            r.n_detections,
            r.n_accepted_lengths,
            r.robust_length_mm
                .map(|m| format!("{m:.1}"))
                .unwrap_or_default()
        )
        .unwrap();
    }
    Ok(TrackOutcome { rows, csv, growth })
}

/// Which region representation `eval` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalKind {
    Mask,
    Box,
}

pub struct EvalOutcome {
    pub summary: EvalSummary,
    pub per_threshold_csv: String,
}

pub fn cmd_eval(
    gt_path: &Path,
    pred_path: &Path,
    kind: EvalKind,
    frame_width: u32,
    frame_height: u32,
) -> Result<EvalOutcome> {
    let to_instances = |path: &Path, require_score: bool| -> Result<Vec<ScoredInstance>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let parsed = parse_via(&text)?;
        parsed
            .annotations
            .into_iter()
            .map(|ann| {
                let region = match kind {
                    EvalKind::Box => {
                        let (x1, y1, x2, y2) = ann.bounds();
                        Region::Box(BBox::new(x1, y1, x2.max(x1 + 1e-6), y2.max(y1 + 1e-6)))
                    }
                    EvalKind::Mask => {
                        let mask = match rasterize_polygon(&ann, frame_width, frame_height) {
                            Ok(m) => m,
                            Err(Error::EmptyMask) => BinaryMask::empty(frame_width, frame_height),
                            Err(e) => return Err(e),
                        };
                        Region::Mask(mask)
                    }
                };
                let score = if require_score {
                    // Unscored predictions rank last rather than failing.
                    Some(ann.score.unwrap_or(0.0))
                } else {
                    None
                };
                Ok(ScoredInstance {
                    image_id: ann.image_id,
                    region,
                    score,
                })
            })
            .collect()
    };

    let gts = to_instances(gt_path, false)?;
    let preds = to_instances(pred_path, true)?;
    let (summary, rows) = summarize_with_breakdown(&gts, &preds)?;
    let mut csv = String::from("iou_threshold,ap,ar\n");
    for r in &rows {
        writeln!(csv, "{:.2},{:.6},{:.6}", r.iou, r.ap, r.ar).unwrap();
    }
    Ok(EvalOutcome {
        summary,
        per_threshold_csv: csv,
    })
}

/// Read a growth CSV (pond_id, doc, source, length_mm).
pub fn read_growth_csv(path: &Path) -> Result<Vec<Measurement>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let m: Measurement =
            record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if !(m.length_mm > 0.0) {
            return Err(Error::Format(format!(
                "{}: non-positive length {}",
                path.display(),
                m.length_mm
            )));
        }
        rows.push(m);
    }
    Ok(rows)
}

pub fn write_growth_csv(measurements: &[Measurement]) -> String {
    let mut out = String::from("pond_id,doc,source,length_mm\n");
    for m in measurements {
        writeln!(
            out,
            "{},{},{},{:.1}",
            m.pond_id,
            m.doc,
            m.source.as_str(),
            m.length_mm
        )
        .unwrap();
    }
    out
}

pub struct ReportOutcome {
    pub bundle: ReportBundle,
    pub n_measurements: usize,
}

pub fn cmd_report(
    inputs: &[PathBuf],
    rejections: Option<RejectionStats>,
    cfg: &RunConfig,
) -> Result<ReportOutcome> {
    let mut measurements = Vec::new();
    for path in inputs {
        measurements.extend(read_growth_csv(path)?);
    }
    let bundle = render_report(&measurements, rejections, &cfg.report)?;
    Ok(ReportOutcome {
        bundle,
        n_measurements: measurements.len(),
    })
}

/// Write the report bundle into `out_dir`.
pub fn write_report_bundle(out_dir: &Path, bundle: &ReportBundle) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    for (name, body) in [
        ("report.svg", &bundle.svg),
        ("summaries.csv", &bundle.summaries_csv),
        ("trend.csv", &bundle.trend_csv),
    ] {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

pub struct SynthOutcome {
    /// Session directories relative to the output root ("" is the root).
    pub session_dirs: Vec<String>,
}

pub fn cmd_synth(spec_path: &Path, out_dir: &Path, seed_override: Option<u64>) -> Result<SynthOutcome> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| Error::io(spec_path.display().to_string(), e))?;
    let mut spec = crate::synth::session::parse_spec(&text)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let written = crate::synth::session::write_sessions(&spec, out_dir)?;
    Ok(SynthOutcome {
        session_dirs: written.session_dirs,
    })
}

/// Debug overlay: skeleton pixels and the selected centreline per frame.
fn dump_skeletons(session: &LoadedSession) -> Result<()> {
    let annotations = parse_session_annotations(session)?;
    let dir = session.dir.join("skeletons");
    fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for (frame_index, frame) in session.manifest.frames.iter().enumerate() {
        let masks = frame_masks(session, frame_index, &annotations)?;
        let mut body = String::new();
        for mask in &masks {
            let Ok(sk) = skeletonize(mask) else { continue };
            for &(x, y) in sk.pixels() {
                writeln!(
                    body,
                    r##"<rect x="{x}" y="{y}" width="1" height="1" fill="#444444"/>"##
                )
                .unwrap();
            }
            let line = longest_path_centreline(&build_graph(&sk));
            let points: Vec<String> = line
                .path
                .iter()
                .map(|&(x, y)| format!("{}.5,{}.5", x, y))
                .collect();
            writeln!(
                body,
                r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="0.8"/>"##,
                points.join(" ")
            )
            .unwrap();
        }
        let svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
            w = session.intrinsics.width,
            h = session.intrinsics.height,
        );
        let path = dir.join(format!("{}.svg", frame.id));
        fs::write(&path, svg).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}
