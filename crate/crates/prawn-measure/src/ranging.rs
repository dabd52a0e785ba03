//! Metric length measurement along a centreline.
//!
//! The chain is: down-sample the centreline, read depth, screen implausible
//! and inconsistent samples, apply the validity gate, replace z outliers,
//! interpolate interior gaps, smooth the pixel path with quadratics, then
//! de-project and sum Euclidean segment lengths.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ingest::{BinaryMask, CameraIntrinsics, DepthFrame};
use crate::skeleton::{extract_centreline, Centreline};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq)]
pub struct RangingConfig {
    /// Pixels between retained centreline samples; first and last are always
    /// kept.
    pub sample_stride: usize,
    /// Minimum fraction of usable samples for a measurement to be accepted.
    pub validity_threshold: f64,
    /// Modified z-score cutoff for depth outliers.
    pub z_outlier_mad_k: f64,
    /// Smoothing degree; the pipeline fits quadratics.
    pub poly_degree: usize,
    /// Plausibility clamp on depth, metres.
    pub min_depth_m: f64,
    pub max_depth_m: f64,
}

impl Default for RangingConfig {
    fn default() -> Self {
        RangingConfig {
            sample_stride: 3,
            validity_threshold: 0.95,
            z_outlier_mad_k: 3.5,
            poly_degree: 2,
            min_depth_m: 0.1,
            max_depth_m: 3.0,
        }
    }
}

impl RangingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_stride < 1 {
            return Err(Error::config("sample_stride", "must be >= 1"));
        }
        if !(self.validity_threshold > 0.0 && self.validity_threshold <= 1.0) {
            return Err(Error::config("validity_threshold", "must be in (0, 1]"));
        }
        if !(self.min_depth_m < self.max_depth_m) {
            return Err(Error::config("min_depth_m", "must be below max_depth_m"));
        }
        if self.poly_degree != 2 {
            return Err(Error::config("poly_degree", "only degree 2 is supported"));
        }
        Ok(())
    }
}

/// One retained centreline pixel with its metric depth, when usable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub pixel: (u32, u32),
    /// Normalized arc parameter along the raw pixel path, in [0, 1].
    pub t: f64,
    /// Metres; `None` is the missing sentinel.
    pub depth_m: Option<f64>,
}

/// Smoothed metric-space centreline.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline3D {
    pub points: Vec<[f64; 3]>,
}

/// Why a centreline was not measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    /// Usable-sample fraction fell below the validity threshold.
    LowValidity,
    /// Fewer usable samples than the fits require.
    TooSparse,
    /// Instance mask had no pixels.
    EmptyMask,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::LowValidity => "low_validity",
            RejectReason::TooSparse => "too_sparse",
            RejectReason::EmptyMask => "empty_mask",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementStatus {
    Accepted,
    Rejected(RejectReason),
}

/// Outcome of measuring one instance in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthResult {
    pub frame_id: String,
    pub instance_id: u32,
    pub status: MeasurementStatus,
    /// Metres; present iff accepted.
    pub length_m: Option<f64>,
    /// Usable fraction of retained samples after the consistency screen.
    pub validity_ratio: f64,
    /// Retained (down-sampled) sample count, the gate denominator.
    pub n_samples: usize,
}

impl LengthResult {
    pub fn is_accepted(&self) -> bool {
        matches!(self.status, MeasurementStatus::Accepted)
    }

    fn rejected(frame_id: &str, instance_id: u32, reason: RejectReason) -> Self {
        LengthResult {
            frame_id: frame_id.to_string(),
            instance_id,
            status: MeasurementStatus::Rejected(reason),
            length_m: None,
            validity_ratio: 0.0,
            n_samples: 0,
        }
    }
}

/// Lift a pixel to camera space through the pinhole model.
pub fn deproject(k: &CameraIntrinsics, u: f64, v: f64, z: f64) -> Result<[f64; 3]> {
    if !(z > 0.0) {
        return Err(Error::InvalidDepth(z));
    }
    Ok([(u - k.ppx) * z / k.fx, (v - k.ppy) * z / k.fy, z])
}

/// Inverse of [`deproject`]: camera-space point back to pixel coordinates.
pub fn project(k: &CameraIntrinsics, p: [f64; 3]) -> (f64, f64) {
    (p[0] * k.fx / p[2] + k.ppx, p[1] * k.fy / p[2] + k.ppy)
}

/// Retain every `sample_stride`-th centreline pixel (plus the last), read its
/// depth at the pixel centre, and clamp implausible values to missing.
pub fn sample_depth_along(
    line: &Centreline,
    depth: &DepthFrame,
    cfg: &RangingConfig,
) -> Vec<DepthSample> {
    let n = line.path.len();
    if n == 0 {
        return Vec::new();
    }
    // Cumulative raw pixel arc length, for the stride-independent parameter.
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in line.path.windows(2) {
        let dx = w[1].0 as f64 - w[0].0 as f64;
        let dy = w[1].1 as f64 - w[0].1 as f64;
        acc += (dx * dx + dy * dy).sqrt();
        cumulative.push(acc);
    }
    let total = acc.max(f64::MIN_POSITIVE);

    let mut samples = Vec::new();
    let mut idx = 0;
    while idx < n {
        samples.push(make_sample(line, &cumulative, total, idx, depth, cfg));
        idx += cfg.sample_stride;
    }
    if samples.last().map(|s| s.pixel) != Some(line.path[n - 1]) {
        samples.push(make_sample(line, &cumulative, total, n - 1, depth, cfg));
    }
    samples
}

fn make_sample(
    line: &Centreline,
    cumulative: &[f64],
    total: f64,
    idx: usize,
    depth: &DepthFrame,
    cfg: &RangingConfig,
) -> DepthSample {
    let (x, y) = line.path[idx];
    let depth_m = depth
        .metres(x, y)
        .filter(|&z| z >= cfg.min_depth_m && z <= cfg.max_depth_m);
    DepthSample {
        pixel: (x, y),
        t: cumulative[idx] / total,
        depth_m,
    }
}

/// Screen samples whose de-projected x or y falls off the local linear trend
/// of their present neighbours by more than `factor` MADs (with a 1 mm floor
/// so collinear runs are never flagged). Needs at least 3 present samples;
/// otherwise the input is returned unchanged.
pub fn reject_inconsistent(
    samples: &mut [DepthSample],
    k: &CameraIntrinsics,
    factor: f64,
) {
    let present: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].depth_m.is_some())
        .collect();
    if present.len() < 3 {
        return;
    }

    let coords: Vec<[f64; 2]> = present
        .iter()
        .map(|&i| {
            let s = &samples[i];
            let z = s.depth_m.unwrap();
            let p = deproject(
                k,
                s.pixel.0 as f64 + 0.5,
                s.pixel.1 as f64 + 0.5,
                z,
            )
            .expect("clamped depth is positive");
            [p[0], p[1]]
        })
        .collect();
    let ts: Vec<f64> = present.iter().map(|&i| samples[i].t).collect();

    let mut flagged = vec![false; present.len()];
    for axis in 0..2 {
        let residuals: Vec<f64> = (0..present.len())
            .map(|j| coords[j][axis] - local_trend(&ts, &coords, axis, j))
            .collect();
        let med = median(&residuals);
        let mad = median(&residuals.iter().map(|r| (r - med).abs()).collect::<Vec<_>>());
        let cutoff = (factor * mad).max(1e-3);
        for (j, r) in residuals.iter().enumerate() {
            if (r - med).abs() > cutoff {
                flagged[j] = true;
            }
        }
    }
    for (j, &i) in present.iter().enumerate() {
        if flagged[j] {
            samples[i].depth_m = None;
        }
    }
}

/// Linear prediction for present sample `j` from its nearest present
/// neighbours; one-sided at the ends.
fn local_trend(ts: &[f64], coords: &[[f64; 2]], axis: usize, j: usize) -> f64 {
    let m = ts.len();
    let (a, b) = if j == 0 {
        (1, 2)
    } else if j == m - 1 {
        (m - 3, m - 2)
    } else {
        (j - 1, j + 1)
    };
    let (ta, tb) = (ts[a], ts[b]);
    let (va, vb) = (coords[a][axis], coords[b][axis]);
    if tb == ta {
        return (va + vb) / 2.0;
    }
    va + (vb - va) * (ts[j] - ta) / (tb - ta)
}

/// Replace extreme depth values with the missing sentinel using the modified
/// z-score |0.6745 (z - median) / MAD| > k. With zero MAD, only values more
/// than 1 mm from the median are outliers.
pub fn replace_z_outliers(zs: &mut [Option<f64>], cfg: &RangingConfig) {
    let present: Vec<f64> = zs.iter().filter_map(|z| *z).collect();
    if present.is_empty() {
        return;
    }
    let med = median(&present);
    let mad = median(&present.iter().map(|z| (z - med).abs()).collect::<Vec<_>>());
    for z in zs.iter_mut() {
        let Some(v) = *z else { continue };
        let outlier = if mad > 0.0 {
            (0.6745 * (v - med) / mad).abs() > cfg.z_outlier_mad_k
        } else {
            (v - med).abs() > 1e-3
        };
        if outlier {
            *z = None;
        }
    }
}

/// Trim leading/trailing missing runs and linearly interpolate the interior
/// ones. Returns the retained index range plus the filled values.
pub fn interpolate_missing(zs: &[Option<f64>]) -> Result<(std::ops::Range<usize>, Vec<f64>)> {
    let first = zs.iter().position(|z| z.is_some());
    let last = zs.iter().rposition(|z| z.is_some());
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::TooSparse("no usable depth samples".into()));
    };
    let window = &zs[first..=last];
    if window.iter().filter(|z| z.is_some()).count() < 2 {
        return Err(Error::TooSparse(
            "need at least 2 usable depth samples".into(),
        ));
    }

    let mut out: Vec<f64> = Vec::with_capacity(window.len());
    let mut i = 0;
    while i < window.len() {
        match window[i] {
            Some(z) => {
                out.push(z);
                i += 1;
            }
            None => {
                // Interior run: bounded by present values on both sides.
                let run_start = i;
                while window[i].is_none() {
                    i += 1;
                }
                let lo = out[run_start - 1];
                let hi = window[i].unwrap();
                let span = (i - run_start + 1) as f64;
                for k in 0..(i - run_start) {
                    out.push(lo + (hi - lo) * (k as f64 + 1.0) / span);
                }
            }
        }
    }
    Ok((first..last + 1, out))
}

/// Least-squares quadratic fit of `vals` over `ts`, solved by SVD.
/// Returns coefficients [c0, c1, c2] for c0 + c1 t + c2 t².
pub fn fit_poly2(ts: &[f64], vals: &[f64]) -> Result<[f64; 3]> {
    assert_eq!(ts.len(), vals.len());
    let mut distinct = ts.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::TooSparse(
            "quadratic fit needs 3 distinct parameters".into(),
        ));
    }
    let design = DMatrix::from_fn(ts.len(), 3, |r, c| ts[r].powi(c as i32));
    let rhs = DVector::from_column_slice(vals);
    let solution = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::TooSparse(e.to_string()))?;
    Ok([solution[0], solution[1], solution[2]])
}

fn eval_poly2(c: &[f64; 3], t: f64) -> f64 {
    c[0] + c[1] * t + c[2] * t * t
}

/// Replace the pixel path with its fitted quadratics in x and y, then
/// de-project every sample with its (already interpolated) depth.
pub fn smooth_centreline(
    samples: &[DepthSample],
    zs: &[f64],
    k: &CameraIntrinsics,
) -> Result<Polyline3D> {
    assert_eq!(samples.len(), zs.len());
    if samples.len() < 3 {
        return Err(Error::TooSparse("smoothing needs 3 samples".into()));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.pixel.0 as f64 + 0.5).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.pixel.1 as f64 + 0.5).collect();
    let cx = fit_poly2(&ts, &xs)?;
    let cy = fit_poly2(&ts, &ys)?;

    let mut points = Vec::with_capacity(samples.len());
    for (i, &t) in ts.iter().enumerate() {
        let u = eval_poly2(&cx, t);
        let v = eval_poly2(&cy, t);
        points.push(deproject(k, u, v, zs[i])?);
    }
    Ok(Polyline3D { points })
}

/// Σ‖pᵢ₊₁ − pᵢ‖₂ over the polyline.
pub fn polyline_length(line: &Polyline3D) -> Result<f64> {
    if line.points.len() < 2 {
        return Err(Error::TooSparse("length needs 2 points".into()));
    }
    Ok(line
        .points
        .windows(2)
        .map(|w| {
            let dx = w[1][0] - w[0][0];
            let dy = w[1][1] - w[0][1];
            let dz = w[1][2] - w[0][2];
            (dx * dx + dy * dy + dz * dz).sqrt()
        })
        .sum())
}

/// Factor applied to the MAD in the pixel-consistency screen.
pub const INCONSISTENCY_MAD_FACTOR: f64 = 5.0;

/// Measure one instance: thin, trace, sample, filter, gate, smooth, sum.
pub fn measure(
    mask: &BinaryMask,
    depth: &DepthFrame,
    k: &CameraIntrinsics,
    cfg: &RangingConfig,
    frame_id: &str,
    instance_id: u32,
) -> Result<LengthResult> {
    if mask.width != depth.width || mask.height != depth.height {
        return Err(Error::Format(format!(
            "mask is {}x{} but depth is {}x{}",
            mask.width, mask.height, depth.width, depth.height
        )));
    }
    let line = match extract_centreline(mask) {
        Ok(line) => line,
        Err(Error::EmptyMask) => {
            return Ok(LengthResult::rejected(
                frame_id,
                instance_id,
                RejectReason::EmptyMask,
            ))
        }
        Err(e) => return Err(e),
    };

    let mut samples = sample_depth_along(&line, depth, cfg);
    reject_inconsistent(&mut samples, k, INCONSISTENCY_MAD_FACTOR);

    let n_samples = samples.len();
    let present = samples.iter().filter(|s| s.depth_m.is_some()).count();
    let validity_ratio = if n_samples == 0 {
        0.0
    } else {
        present as f64 / n_samples as f64
    };

    let mut result = LengthResult {
        frame_id: frame_id.to_string(),
        instance_id,
        status: MeasurementStatus::Accepted,
        length_m: None,
        validity_ratio,
        n_samples,
    };
    if validity_ratio < cfg.validity_threshold {
        result.status = MeasurementStatus::Rejected(RejectReason::LowValidity);
        return Ok(result);
    }

    let mut zs: Vec<Option<f64>> = samples.iter().map(|s| s.depth_m).collect();
    replace_z_outliers(&mut zs, cfg);
    let (kept, filled) = match interpolate_missing(&zs) {
        Ok(v) => v,
        Err(Error::TooSparse(_)) => {
            result.status = MeasurementStatus::Rejected(RejectReason::TooSparse);
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    let kept_samples = &samples[kept];

    let polyline = match smooth_centreline(kept_samples, &filled, k) {
        Ok(p) => p,
        Err(Error::TooSparse(_)) => {
            result.status = MeasurementStatus::Rejected(RejectReason::TooSparse);
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    let length = polyline_length(&polyline)?;
    result.length_m = Some(length);
    Ok(result)
}
