//! SORT-style multi-object tracking: Kalman prediction per track, IoU cost,
//! optimal assignment, and robust per-track length aggregation.

mod hungarian;
mod kalman;

pub use hungarian::assign_min_cost;
pub use kalman::{KalmanBoxState, KalmanParams};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        debug_assert!(x2 > x1 && y2 > y1, "degenerate box");
        BBox { x1, y1, x2, y2 }
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Frames a track survives without a match.
    pub max_age: u32,
    /// Minimum hits before a track is reported; 0 reports from the first
    /// frame.
    pub min_hits: u32,
    /// Matches below this IoU are discarded.
    pub iou_threshold: f64,
    pub kalman: KalmanParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            max_age: 10,
            min_hits: 0,
            iou_threshold: 0.2,
            kalman: KalmanParams::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::config("iou_threshold", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Kalman-filtered identity with its accumulated accepted lengths.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub kalman: KalmanBoxState,
    pub hits: u32,
    pub age: u32,
    pub time_since_update: u32,
    /// Accepted per-frame length estimates, metres.
    pub lengths: Vec<f64>,
    pub first_frame: u64,
    pub last_frame: u64,
    pub n_detections: u32,
}

/// One detection entering the tracker: its box plus the accepted length for
/// that frame, when the measurement gate passed.
#[derive(Debug, Clone, Copy)]
pub struct Detection {
    pub bbox: BBox,
    pub length_m: Option<f64>,
}

/// Association outcome over one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    /// (track index, detection index) pairs.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Optimal assignment minimizing Σ(1 − IoU), then demote pairs under the
/// threshold. Outputs are sorted by index for determinism.
pub fn associate(
    predicted: &[BBox],
    detections: &[BBox],
    iou_threshold: f64,
) -> Association {
    if predicted.is_empty() || detections.is_empty() {
        return Association {
            matches: Vec::new(),
            unmatched_tracks: (0..predicted.len()).collect(),
            unmatched_detections: (0..detections.len()).collect(),
        };
    }

    let transpose = predicted.len() > detections.len();
    let (n_rows, n_cols) = if transpose {
        (detections.len(), predicted.len())
    } else {
        (predicted.len(), detections.len())
    };
    let cost: Vec<Vec<f64>> = (0..n_rows)
        .map(|r| {
            (0..n_cols)
                .map(|c| {
                    let (t, d) = if transpose { (c, r) } else { (r, c) };
                    1.0 - iou(&predicted[t], &detections[d])
                })
                .collect()
        })
        .collect();
    let assignment = assign_min_cost(&cost);

    let mut matches = Vec::new();
    let mut matched_tracks = vec![false; predicted.len()];
    let mut matched_dets = vec![false; detections.len()];
    for (row, col) in assignment.iter().enumerate() {
        let (t, d) = if transpose { (*col, row) } else { (row, *col) };
        if iou(&predicted[t], &detections[d]) >= iou_threshold {
            matches.push((t, d));
            matched_tracks[t] = true;
            matched_dets[d] = true;
        }
    }
    matches.sort_unstable();
    Association {
        matches,
        unmatched_tracks: (0..predicted.len()).filter(|&t| !matched_tracks[t]).collect(),
        unmatched_detections: (0..detections.len()).filter(|&d| !matched_dets[d]).collect(),
    }
}

/// A track's box reported for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedBox {
    pub track_id: u64,
    pub bbox: BBox,
}

/// Per-session SORT tracker. Frames must arrive in capture order.
#[derive(Debug, Clone)]
pub struct SortTracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
    /// Tracks removed by ageing, kept for reporting.
    retired: Vec<Track>,
}

impl SortTracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        SortTracker {
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            retired: Vec::new(),
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live tracks after the latest step.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Every track ever created, in id order: live first-class plus retired.
    pub fn all_tracks(&self) -> Vec<&Track> {
        let mut all: Vec<&Track> = self.retired.iter().chain(self.tracks.iter()).collect();
        all.sort_by_key(|t| t.id);
        all
    }

    /// Advance one frame: predict, associate, update, spawn, retire.
    /// Returns the reported (track id, box) pairs for this frame.
    pub fn step(&mut self, frame: u64, detections: &[Detection]) -> Result<Vec<TrackedBox>> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::Order { got: frame, last });
            }
        }
        self.last_frame = Some(frame);

        let predicted: Vec<BBox> = self
            .tracks
            .iter_mut()
            .map(|t| {
                t.age += 1;
                t.time_since_update += 1;
                t.kalman.predict()
            })
            .collect();
        let det_boxes: Vec<BBox> = detections.iter().map(|d| d.bbox).collect();
        let assoc = associate(&predicted, &det_boxes, self.cfg.iou_threshold);

        for &(t, d) in &assoc.matches {
            let track = &mut self.tracks[t];
            track.kalman.update(&detections[d].bbox);
            track.hits += 1;
            track.n_detections += 1;
            track.time_since_update = 0;
            track.last_frame = frame;
            if let Some(len) = detections[d].length_m {
                track.lengths.push(len);
            }
        }
        for &d in &assoc.unmatched_detections {
            let mut track = Track {
                id: self.next_id,
                kalman: KalmanBoxState::new(&detections[d].bbox, &self.cfg.kalman),
                hits: 1,
                age: 0,
                time_since_update: 0,
                lengths: Vec::new(),
                first_frame: frame,
                last_frame: frame,
                n_detections: 1,
            };
            self.next_id += 1;
            if let Some(len) = detections[d].length_m {
                track.lengths.push(len);
            }
            self.tracks.push(track);
        }

        let max_age = self.cfg.max_age;
        let mut kept = Vec::with_capacity(self.tracks.len());
        for track in self.tracks.drain(..) {
            if track.time_since_update > max_age {
                self.retired.push(track);
            } else {
                kept.push(track);
            }
        }
        self.tracks = kept;

        let min_hits = self.cfg.min_hits;
        let mut reported: Vec<TrackedBox> = self
            .tracks
            .iter()
            .filter(|t| t.time_since_update == 0 && t.hits >= min_hits.max(1))
            .map(|t| TrackedBox {
                track_id: t.id,
                bbox: t.kalman.bbox(),
            })
            .collect();
        reported.sort_by_key(|r| r.track_id);
        Ok(reported)
    }
}

/// Robust per-track length: drop values outside the 1.5·IQR fences (R-7
/// quartiles), return the median of the survivors. Permutation invariant.
pub fn aggregate_lengths(lengths: &[f64]) -> Option<f64> {
    use crate::stats::{median_sorted, quantile_r7};
    if lengths.is_empty() {
        return None;
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite lengths"));
    let q1 = quantile_r7(&sorted, 0.25);
    let q3 = quantile_r7(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let survivors: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&v| v >= lo && v <= hi)
        .collect();
    if survivors.is_empty() {
        return None;
    }
    Some(median_sorted(&survivors))
}
