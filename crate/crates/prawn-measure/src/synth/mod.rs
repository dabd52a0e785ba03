//! Synthetic scenes with exact ground truth: ribbon-shaped "prawns" along
//! Bézier curves over planar depth, plus scripted box motion for the tracker.
//! These are the independent oracles the test suites measure against.

mod rng;
pub mod session;

pub use rng::{pixel_uniform, splitmix64, Xoshiro256};

use crate::error::{Error, Result};
use crate::ingest::{BinaryMask, CameraIntrinsics, DepthFrame};
use crate::ranging::deproject;
use crate::tracking::BBox;

/// Image-plane curve given by Bézier control points. Quadratic matches the
/// pipeline's degree-2 smoother; cubic exists to measure model-mismatch bias.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    Quadratic([[f64; 2]; 3]),
    Cubic([[f64; 2]; 4]),
}

impl CurveSpec {
    pub fn point(&self, t: f64) -> [f64; 2] {
        match self {
            CurveSpec::Quadratic([a, b, c]) => {
                let u = 1.0 - t;
                let w = [u * u, 2.0 * u * t, t * t];
                [
                    w[0] * a[0] + w[1] * b[0] + w[2] * c[0],
                    w[0] * a[1] + w[1] * b[1] + w[2] * c[1],
                ]
            }
            CurveSpec::Cubic([a, b, c, d]) => {
                let u = 1.0 - t;
                let w = [u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t];
                [
                    w[0] * a[0] + w[1] * b[0] + w[2] * c[0] + w[3] * d[0],
                    w[0] * a[1] + w[1] * b[1] + w[2] * c[1] + w[3] * d[1],
                ]
            }
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> CurveSpec {
        let shift = |p: &[f64; 2]| [p[0] + dx, p[1] + dy];
        match self {
            CurveSpec::Quadratic(ps) => {
                CurveSpec::Quadratic([shift(&ps[0]), shift(&ps[1]), shift(&ps[2])])
            }
            CurveSpec::Cubic(ps) => {
                CurveSpec::Cubic([shift(&ps[0]), shift(&ps[1]), shift(&ps[2]), shift(&ps[3])])
            }
        }
    }
}

/// Planar depth under the prawn: z at the frame centre plus per-pixel tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthModel {
    pub z_centre_m: f64,
    pub tilt_x_per_px: f64,
    pub tilt_y_per_px: f64,
}

impl DepthModel {
    pub fn flat(z: f64) -> Self {
        DepthModel {
            z_centre_m: z,
            tilt_x_per_px: 0.0,
            tilt_y_per_px: 0.0,
        }
    }

    pub fn z_at(&self, u: f64, v: f64, k: &CameraIntrinsics) -> f64 {
        self.z_centre_m
            + self.tilt_x_per_px * (u - k.width as f64 / 2.0)
            + self.tilt_y_per_px * (v - k.height as f64 / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPrawn {
    pub curve: CurveSpec,
    pub half_width_px: f64,
    pub depth: DepthModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub intrinsics: CameraIntrinsics,
    pub prawns: Vec<SyntheticPrawn>,
    /// Fraction of depth pixels knocked out to the invalid sentinel.
    pub hole_rate: f64,
    /// Gaussian depth noise, metres.
    pub depth_noise_sigma_m: f64,
    /// Tray depth away from any prawn.
    pub background_depth_m: f64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.hole_rate) {
            return Err(Error::Spec("hole_rate must be in [0, 1)".into()));
        }
        if self.depth_noise_sigma_m < 0.0 {
            return Err(Error::Spec("depth noise must be >= 0".into()));
        }
        if self.prawns.is_empty() {
            return Err(Error::Spec("scene has no prawns".into()));
        }
        Ok(())
    }
}

/// Ground truth for one generated prawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    /// Metric arc length of the de-projected curve (numeric integral).
    pub length_m: f64,
    /// Pixel arc length of the image-plane curve.
    pub pixel_arc_length: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub masks: Vec<BinaryMask>,
    pub depth: DepthFrame,
    pub truths: Vec<SceneTruth>,
}

/// Samples along a curve for rasterization; dense enough that the polyline
/// deviates from the true curve by far less than a pixel.
const CURVE_SAMPLES: usize = 2048;
/// Subdivisions for the arc-length oracle.
pub const ORACLE_SUBDIVISIONS: usize = 10_000;

/// Numeric arc length of the de-projected curve over its depth plane.
pub fn true_metric_length(
    curve: &CurveSpec,
    depth: &DepthModel,
    k: &CameraIntrinsics,
    subdivisions: usize,
) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<[f64; 3]> = None;
    for i in 0..=subdivisions {
        let t = i as f64 / subdivisions as f64;
        let [u, v] = curve.point(t);
        let z = depth.z_at(u, v, k);
        let p = deproject(k, u, v, z).expect("synthetic depth is positive");
        if let Some(q) = prev {
            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            total += (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        }
        prev = Some(p);
    }
    total
}

fn pixel_arc_length(curve: &CurveSpec, subdivisions: usize) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<[f64; 2]> = None;
    for i in 0..=subdivisions {
        let t = i as f64 / subdivisions as f64;
        let p = curve.point(t);
        if let Some(q) = prev {
            total += ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        }
        prev = Some(p);
    }
    total
}

fn point_segment_distance_sq(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len_sq).clamp(0.0, 1.0)
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0] * d[0] + d[1] * d[1]
}

/// Ribbon mask: every pixel whose centre lies within `half_width` of the
/// sampled curve polyline.
pub fn ribbon_mask(curve: &CurveSpec, half_width: f64, width: u32, height: u32) -> BinaryMask {
    let pts: Vec<[f64; 2]> = (0..=CURVE_SAMPLES)
        .map(|i| curve.point(i as f64 / CURVE_SAMPLES as f64))
        .collect();
    let mut mask = BinaryMask::empty(width, height);
    let hw_sq = half_width * half_width;
    let reach = half_width + 1.0;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let x_lo = ((a[0].min(b[0]) - reach).floor().max(0.0)) as u32;
        let x_hi = ((a[0].max(b[0]) + reach).ceil().min(width as f64 - 1.0)) as u32;
        let y_lo = ((a[1].min(b[1]) - reach).floor().max(0.0)) as u32;
        let y_hi = ((a[1].max(b[1]) + reach).ceil().min(height as f64 - 1.0)) as u32;
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                if mask.get(x, y) {
                    continue;
                }
                let centre = [x as f64 + 0.5, y as f64 + 0.5];
                if point_segment_distance_sq(centre, a, b) <= hw_sq {
                    mask.set(x, y, true);
                }
            }
        }
    }
    mask
}

/// Generate masks, a depth frame, and exact truth lengths for a scene.
pub fn gen_scene(spec: &SceneSpec) -> Result<GeneratedScene> {
    spec.validate()?;
    let k = &spec.intrinsics;
    let (w, h) = (k.width, k.height);

    // The full ribbon must fit inside the frame or the truth is wrong.
    for (i, prawn) in spec.prawns.iter().enumerate() {
        for s in 0..=CURVE_SAMPLES {
            let [u, v] = prawn.curve.point(s as f64 / CURVE_SAMPLES as f64);
            let m = prawn.half_width_px + 1.0;
            if u < m || v < m || u > w as f64 - m || v > h as f64 - m {
                return Err(Error::Spec(format!(
                    "prawn {i} ribbon exits the frame at ({u:.1}, {v:.1})"
                )));
            }
        }
    }

    let mut masks = Vec::with_capacity(spec.prawns.len());
    let mut truths = Vec::with_capacity(spec.prawns.len());
    for prawn in &spec.prawns {
        masks.push(ribbon_mask(&prawn.curve, prawn.half_width_px, w, h));
        truths.push(SceneTruth {
            length_m: true_metric_length(&prawn.curve, &prawn.depth, k, ORACLE_SUBDIVISIONS),
            pixel_arc_length: pixel_arc_length(&prawn.curve, ORACLE_SUBDIVISIONS),
        });
    }

    // Depth: background plane, overridden by each prawn's plane inside its
    // mask (later prawns win in overlaps), then noise, then holes.
    let mut z_m = vec![spec.background_depth_m; w as usize * h as usize];
    for (prawn, mask) in spec.prawns.iter().zip(&masks) {
        for (x, y) in mask.iter_set() {
            z_m[y as usize * w as usize + x as usize] =
                prawn
                    .depth
                    .z_at(x as f64 + 0.5, y as f64 + 0.5, k);
        }
    }

    let mut noise = Xoshiro256::seeded(spec.seed);
    let mut values = vec![0u16; w as usize * h as usize];
    for y in 0..h {
        for x in 0..w {
            let i = y as usize * w as usize + x as usize;
            let mut z = z_m[i];
            if spec.depth_noise_sigma_m > 0.0 {
                z += spec.depth_noise_sigma_m * noise.gaussian();
            }
            if pixel_uniform(spec.seed, x, y) < spec.hole_rate {
                continue; // hole: stays 0
            }
            let units = (z / k.depth_scale).round();
            values[i] = units.clamp(1.0, 65535.0) as u16;
        }
    }

    Ok(GeneratedScene {
        masks,
        depth: DepthFrame::new(w, h, values, k.depth_scale)?,
        truths,
    })
}

/// Scripted motion of one box: linear velocity with optional teleports.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxScript {
    pub initial: BBox,
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// (frame, new top-left): applied before that frame is emitted.
    pub jumps: Vec<(u64, (f64, f64))>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionScript {
    pub n_frames: u64,
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<BoxScript>,
}

/// Per-frame ground truth: (scripted box index, box).
pub fn gen_motion(script: &MotionScript) -> Result<Vec<Vec<(usize, BBox)>>> {
    let mut frames = Vec::with_capacity(script.n_frames as usize);
    for frame in 0..script.n_frames {
        let mut dets = Vec::with_capacity(script.boxes.len());
        for (id, b) in script.boxes.iter().enumerate() {
            let w = b.initial.x2 - b.initial.x1;
            let h = b.initial.y2 - b.initial.y1;
            // Anchor resets at the most recent jump at or before this frame.
            let (anchor_frame, (ax, ay)) = b
                .jumps
                .iter()
                .filter(|(jf, _)| *jf <= frame)
                .max_by_key(|(jf, _)| *jf)
                .copied()
                .unwrap_or((0, (b.initial.x1, b.initial.y1)));
            let dt = (frame - anchor_frame) as f64;
            let x1 = ax + b.velocity.0 * dt;
            let y1 = ay + b.velocity.1 * dt;
            let bbox = BBox {
                x1,
                y1,
                x2: x1 + w,
                y2: y1 + h,
            };
            if bbox.x1 < 0.0
                || bbox.y1 < 0.0
                || bbox.x2 > script.width as f64
                || bbox.y2 > script.height as f64
            {
                return Err(Error::Spec(format!(
                    "box {id} leaves the frame at frame {frame}"
                )));
            }
            dets.push((id, bbox));
        }
        frames.push(dets);
    }
    Ok(frames)
}

/// Parameters for randomized prawn layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPrawnParams {
    pub length_mm: (f64, f64),
    pub depth_m: (f64, f64),
    /// Fraction of prawns drawn straight; the rest get quadratic curvature.
    pub straight_fraction: f64,
    /// Max mid-curve sagitta as a fraction of the chord.
    pub max_sagitta_frac: f64,
    /// Ribbon half-width as a fraction of the pixel chord, clamped below.
    pub half_width_frac: f64,
    pub max_half_width_px: f64,
}

impl Default for RandomPrawnParams {
    fn default() -> Self {
        RandomPrawnParams {
            length_mm: (60.0, 200.0),
            depth_m: (0.3, 1.0),
            straight_fraction: 0.5,
            max_sagitta_frac: 0.06,
            // Thin ribbons: thinning erodes roughly one half-width per end,
            // so the relative endpoint bias stays small even for short
            // prawns.
            half_width_frac: 0.012,
            max_half_width_px: 4.0,
        }
    }
}

/// Lay out up to `count` random prawns in horizontal bands of the frame.
/// Returns fewer when the frame runs out of bands.
pub fn random_prawns(
    rng: &mut Xoshiro256,
    k: &CameraIntrinsics,
    count: usize,
    params: &RandomPrawnParams,
) -> Vec<SyntheticPrawn> {
    let mut out = Vec::new();
    let band_height = 64.0;
    let bands = ((k.height as f64 - 2.0 * band_height) / band_height) as usize;
    for i in 0..count.min(bands) {
        let y_mid = band_height * (i as f64 + 1.5);
        let length_m = rng.range(params.length_mm.0, params.length_mm.1) / 1000.0;
        let z = rng.range(params.depth_m.0, params.depth_m.1);
        let chord_px = (length_m * k.fx / z).min(k.width as f64 - 64.0);
        let half_width = (chord_px * params.half_width_frac)
            .clamp(1.0, params.max_half_width_px);
        let x0 = rng.range(16.0, (k.width as f64 - chord_px - 16.0).max(17.0));
        let straight = rng.uniform() < params.straight_fraction;
        let sagitta = if straight {
            0.0
        } else {
            rng.range(0.01, params.max_sagitta_frac) * chord_px
        };
        // Quadratic Bézier: control-point offset is twice the sagitta.
        let curve = CurveSpec::Quadratic([
            [x0, y_mid],
            [x0 + chord_px / 2.0, y_mid - 2.0 * sagitta],
            [x0 + chord_px, y_mid],
        ]);
        out.push(SyntheticPrawn {
            curve,
            half_width_px: half_width,
            depth: DepthModel::flat(z),
        });
    }
    out
}

/// Seeded connected blob for thinning property tests: a worm-like stroke (a
/// directional walk with momentum, stamped with a small disc). This matches
/// the domain's elongated instance shapes; dense clumps are avoided because
/// strict two-subiteration thinning can erase solid even-sized blocks
/// entirely.
pub fn random_blob(rng: &mut Xoshiro256, width: u32, height: u32) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    let mut x = rng.range(width as f64 * 0.3, width as f64 * 0.7);
    let mut y = rng.range(height as f64 * 0.3, height as f64 * 0.7);
    let mut heading = rng.range(0.0, std::f64::consts::TAU);
    let steps = 12 + rng.below(90);
    let radius = 1 + rng.below(2) as i64;
    for _ in 0..steps {
        let cx = x as i64;
        let cy = y as i64;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                if dx * dx + dy * dy <= radius * radius {
                    let px = cx + dx;
                    let py = cy + dy;
                    if px >= 0 && py >= 0 && (px as u32) < width && (py as u32) < height {
                        mask.set(px as u32, py as u32, true);
                    }
                }
            }
        }
        heading += rng.range(-0.5, 0.5);
        x = (x + heading.cos()).clamp(1.0, width as f64 - 2.0);
        y = (y + heading.sin()).clamp(1.0, height as f64 - 2.0);
    }
    mask
}
